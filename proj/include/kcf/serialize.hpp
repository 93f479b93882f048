#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "kcf/dynamics.hpp"
#include "kcf/edmd.hpp"
#include "kcf/families.hpp"
#include "kcf/learning.hpp"
#include "kcf/separable.hpp"

namespace kcf::io {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const Json& j);

/// {tool_version, seed, config_hash}
Json provenance(std::uint64_t seed, const Json& config);

Json family_to_json(const FamilySpec& f);
FamilySpec family_from_json(const Json& j);

/// {kind: "parametric", family, dims, fixed_head, x_scale, u_scale, parameters}
Json dictionary_to_json(const ParametricDictionary& d);
ParametricDictionary parametric_from_json(const Json& j);

/// {kind: "builtin", name: "example_poly", with_square, with_sin}
Json builtin_dictionary_json(bool with_square = true, bool with_sin = true);

/// A loaded dictionary: the normal-form view plus the trainable object when parametric.
struct LoadedDictionary {
    NormalDictionary normal;
    std::optional<ParametricDictionary> parametric;
    Json descriptor;
};

LoadedDictionary load_dictionary(const Json& j);

Json consistency_to_json(const ConsistencyReport& r);

Json model_to_json(const AnyModel& model);
/// Rebuilds the model, including its dictionary, from model_to_json output.
AnyModel model_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

Json train_report_to_json(const TrainReport& r);
std::string train_report_csv(const TrainReport& r);

/// Sidecar manifest {n, m, N, seed, system_name, dt}.
Json snapshot_manifest(const SnapshotSet& ss);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace kcf::io
