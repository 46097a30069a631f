#include "qbai/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "json.hpp"

namespace qbai {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace dist {
namespace {

using nlohmann::json;

json points_to_json(const std::vector<Point>& pts) {
  json out = json::array();
  for (const auto& [x, m] : pts) out.push_back({x, m});
  return out;
}

std::vector<Point> points_from_json(const json& j, const char* key) {
  if (!j.is_array()) throw std::invalid_argument(std::string(key) + " must be an array");
  std::vector<Point> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) {
      throw std::invalid_argument(std::string(key) + " entries must be [x, value] pairs");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

json arm_to_json(const RewardDistribution& arm) {
  json j;
  j["family"] = std::string(arm.family_name());
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DiracUniformMixture>) {
          j["w"] = f.w;
        } else if constexpr (std::is_same_v<T, Deterministic>) {
          j["r"] = f.r;
        } else if constexpr (std::is_same_v<T, Discrete>) {
          j["support"] = points_to_json(f.support);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          j["a"] = f.a;
          j["b"] = f.b;
        } else {
          j["knots"] = points_to_json(f.knots);
          j["atoms"] = points_to_json(f.atoms);
        }
      },
      arm.family());
  return j;
}

RewardDistribution arm_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("arm entry must be an object");
  const auto family = j.at("family").get<std::string>();
  if (family == "dirac_uniform_mixture") {
    return RewardDistribution::dirac_uniform_mixture(j.at("w").get<double>());
  }
  if (family == "deterministic") return RewardDistribution::deterministic(j.at("r").get<double>());
  if (family == "discrete") {
    return RewardDistribution::discrete(points_from_json(j.at("support"), "support"));
  }
  if (family == "uniform") {
    return RewardDistribution::uniform(j.at("a").get<double>(), j.at("b").get<double>());
  }
  if (family == "piecewise") {
    auto atoms = j.contains("atoms") ? points_from_json(j.at("atoms"), "atoms") : std::vector<Point>{};
    return RewardDistribution::piecewise(points_from_json(j.at("knots"), "knots"), std::move(atoms));
  }
  throw std::invalid_argument("unknown family tag: " + family);
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  json j;
  j["q"] = inst.q();
  j["lambda"] = inst.lambda();
  j["arms"] = json::array();
  for (const auto& arm : inst.arms()) j["arms"].push_back(arm_to_json(arm));
  return j.dump(2) + "\n";
}

Instance instance_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("instance must be a JSON object");
    std::vector<RewardDistribution> arms;
    for (const auto& a : j.at("arms")) arms.push_back(arm_from_json(a));
    return Instance(std::move(arms), j.at("q").get<double>(), j.at("lambda").get<double>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed instance: ") + e.what());
  }
}

Instance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_file(path));
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  write_file_atomic(path, instance_to_json(inst));
}

}  // namespace dist
}  // namespace qbai
