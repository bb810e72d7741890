#ifndef TSLAB_SERIALIZATION_HPP
#define TSLAB_SERIALIZATION_HPP

#include <string>

#include <json.hpp>

#include "tslab/experiments.hpp"
#include "tslab/hypotheses.hpp"
#include "tslab/processes.hpp"

namespace tslab {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

// Process specs round-trip with field names matching the domain types:
// {"type": "finite_chain", "transition": ..., "atoms": ..., "init": ... |
//  "stationary", "target_fn": ..., "noise_std": ...}
// {"type": "lds", "A_star": ..., "H": ..., "trunc_radius"?: ...}
// {"type": "glm", "A_star": ..., "H": ..., "link": {"tag", "zeta"},
//  "P_star": ..., "rho": ..., "trunc_radius"?: ...}
Json process_to_json(const ProcessSpec& spec);
ProcessSpec process_from_json(const Json& j);

Json link_to_json(const LinkFn& link);
LinkFn link_from_json(const Json& j);

Json family_to_json(const HypothesisSpec& family);
HypothesisSpec family_from_json(const Json& j);

Json member_to_json(const Member& member);

// Columns t, x_0..x_{d-1}, y_0..y_{d-1}.
void write_trajectory_csv(const TrajectoryBatch& batch, const std::string& path);

// Cover element parameters, one row per element, for audit.
void write_cover_csv(const CoverCertificate& cert, const std::string& path);

// Dependency matrix as a dense CSV grid.
void write_dependency_csv(const Matrix& gamma, const std::string& path);

}  // namespace tslab

#endif  // TSLAB_SERIALIZATION_HPP
