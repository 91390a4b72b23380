#ifndef FSN_IO_HPP
#define FSN_IO_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fsn/curvefit.hpp"
#include "fsn/fs_neuron.hpp"
#include "fsn/train.hpp"

namespace fsn {

using json = nlohmann::json;

// {"k": int, "h": [...], "d": [...], "T": [...]}
json params_to_json(const FsParams& params);
FsParams params_from_json(const json& j);

// {"family": str, "coefficients": [...], "residual_rms": float, "k": int}
json curve_to_json(const CurveModel& model);
CurveModel curve_from_json(const json& j);

json config_to_json(const TrainConfig& config);
// Missing keys keep the values already in `base`.
TrainConfig config_from_json(const json& j, TrainConfig base = {});

// Wall time is left out so reruns serialize identically.
json history_to_json(const TrainHistory& history);

std::string read_file(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);
void write_json_atomic(const std::filesystem::path& path, const json& j);

}  // namespace fsn

#endif  // FSN_IO_HPP
