#pragma once

#include <string>

#include "mahalf/asymptotics.hpp"
#include "mahalf/exterior_scheme.hpp"
#include "mahalf/field.hpp"
#include "mahalf/linear_elliptic.hpp"

namespace mahalf {

/// Write via a temporary file + rename so readers never see partial output.
void write_text_atomic(const std::string& path, const std::string& content);

/// Grid descriptor: {"dim": d, "h": h, "L": L, "L_n": L_n}.
std::string grid_json(const HalfGrid& grid);

/// Field snapshot CSV: columns i, j[, k], x1, x2[, x3], value.
std::string field_csv(const ScalarField& field);
void write_field_csv(const std::string& path, const ScalarField& field);

std::string to_json(const DecayFit& fit);
std::string to_json(const PipelineReport& report);
std::string to_json(const BarrierCheckReport& report);
std::string to_json(const StrictBoundReport& report);
std::string to_json(const LimitReport& report);
std::string to_json(const NormalizationResult& result);
std::string to_json(const XiReport& report);
std::string to_json(const LiouvilleReport& report);
std::string to_json(const SandwichReport& report);
std::string to_json(const ScheduleResult& result);

/// 64-bit FNV-1a over a byte string (snapshot regression hashes).
std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace mahalf
