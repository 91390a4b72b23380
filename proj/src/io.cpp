#include "fsn/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fsn {

namespace {

std::vector<double> number_array(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw std::invalid_argument(std::string("missing array field '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& x : j.at(key)) {
    if (!x.is_number()) {
      throw std::invalid_argument(std::string("non-numeric entry in '") + key + "'");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

json params_to_json(const FsParams& params) {
  return json{{"k", params.k()},
              {"h", params.h()},
              {"d", params.d()},
              {"T", params.thr()}};
}

FsParams params_from_json(const json& j) {
  if (!j.is_object() || !j.contains("k") || !j.at("k").is_number_integer()) {
    throw std::invalid_argument("params JSON: missing integer field 'k'");
  }
  const auto k = j.at("k").get<long long>();
  FsParams p(number_array(j, "h"), number_array(j, "d"), number_array(j, "T"));
  if (k < 1 || static_cast<std::size_t>(k) != p.k()) {
    throw std::invalid_argument("params JSON: 'k' does not match array lengths");
  }
  return p;
}

json curve_to_json(const CurveModel& model) {
  return json{{"family", to_string(model.family)},
              {"coefficients", model.coefficients},
              {"residual_rms", model.residual_rms},
              {"k", model.domain_k}};
}

CurveModel curve_from_json(const json& j) {
  CurveModel m;
  m.family = parse_fit_family(j.at("family").get<std::string>());
  if (m.family.tag == FitFamily::Tag::kAuto) {
    throw std::invalid_argument("curve JSON: family must be resolved");
  }
  m.coefficients = number_array(j, "coefficients");
  if (m.coefficients.size() != m.family.coefficient_count()) {
    throw std::invalid_argument("curve JSON: coefficient count mismatch");
  }
  m.residual_rms = j.at("residual_rms").get<double>();
  m.domain_k = j.at("k").get<std::size_t>();
  return m;
}

json config_to_json(const TrainConfig& c) {
  return json{{"grid_min", c.grid.x_min},
              {"grid_max", c.grid.x_max},
              {"grid_n", c.grid.size()},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"surrogate_width", c.surrogate_width},
              {"seed", c.seed},
              {"target", std::string(to_string(c.target))}};
}

TrainConfig config_from_json(const json& j, TrainConfig c) {
  const double lo = j.value("grid_min", c.grid.x_min);
  const double hi = j.value("grid_max", c.grid.x_max);
  const std::size_t n = j.value("grid_n", c.grid.size());
  // a full-batch base stays full-batch when the grid is resized
  const bool was_full = c.batch_size == c.grid.size();
  c.grid = make_grid(lo, hi, n);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", was_full ? n : c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.surrogate_width = j.value("surrogate_width", c.surrogate_width);
  c.seed = j.value("seed", c.seed);
  if (j.contains("target")) {
    c.target = parse_activation(j.at("target").get<std::string>());
  }
  return c;
}

json history_to_json(const TrainHistory& h) {
  return json{{"loss", h.loss},
              {"final_mse", h.final_mse},
              {"best_epoch", h.best_epoch},
              {"epochs", h.loss.size()}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace fsn
