#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "isac/model.hpp"
#include "isac/precoder.hpp"

namespace isac {

/// Malformed or incompatible dataset / state file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kDatasetVersion = 1;

/// Per-sample scales for the learning loss: best correlation reachable with
/// TTDs, com-dedicated rate and sensing-dedicated CRB.
struct Normalizers {
    double cor_star = 0.0;
    double r_max = 0.0;
    double crb_min = 0.0;
};

struct DatasetSample {
    ChannelRealization realization;
    std::optional<Normalizers> normalizers;
};

struct Dataset {
    SystemConfig cfg;
    std::vector<DatasetSample> samples;
};

nlohmann::json config_to_json(const SystemConfig& cfg);
/// Keys missing from `j` keep their value from `base`; unknown keys are rejected.
SystemConfig config_from_json(const nlohmann::json& j, const SystemConfig& base);

nlohmann::json dataset_to_json(const Dataset& d);
/// Rebuilds h and G from the stored parameters.
Dataset dataset_from_json(const nlohmann::json& j);
void export_dataset(const Dataset& d, const std::string& path);
Dataset import_dataset(const std::string& path);

nlohmann::json state_to_json(const PrecoderState& s);
/// Shapes are checked against cfg; values are not (see hardware_violation).
PrecoderState state_from_json(const nlohmann::json& j, const SystemConfig& cfg);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace isac
