#include "crowd/instance_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "crowd/errors.hpp"

namespace crowd {

using nlohmann::json;

namespace {

constexpr double kStochasticTolerance = 1e-6;

double number_at(const json& j, const std::string& what, const std::string& source) {
  if (!j.is_number()) throw ConfigError(fmt::format("{}: {} must be a number", source, what));
  return j.get<double>();
}

ConfusionMatrix parse_confusion(const json& m, const std::string& where, const std::string& source) {
  if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 2 || !m[1].is_array() ||
      m[1].size() != 2) {
    throw ConfigError(fmt::format("{}: {}.confusion must be a 2x2 array", source, where));
  }
  double e[2][2];
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      e[r][c] = number_at(m[r][c], fmt::format("{}.confusion[{}][{}]", where, r, c), source);
      if (e[r][c] < 0.0 || e[r][c] > 1.0) {
        throw ConfigError(fmt::format("{}: {}.confusion[{}][{}] = {} outside [0,1]", source, where, r, c, e[r][c]));
      }
    }
  }
  for (int c = 0; c < 2; ++c) {
    if (std::abs(e[0][c] + e[1][c] - 1.0) > kStochasticTolerance) {
      throw ConfigError(fmt::format("{}: {}.confusion column {} does not sum to 1", source, where, c));
    }
  }
  return ConfusionMatrix(e[0][0], e[1][1]);
}

}  // namespace

Instance instance_from_json(const json& doc, const std::string& source, std::string name) {
  if (!doc.is_object()) throw ConfigError(fmt::format("{}: instance must be a JSON object", source));
  if (!doc.contains("classes") || !doc["classes"].is_array()) {
    throw ConfigError(fmt::format("{}: missing \"classes\" array", source));
  }

  std::string pricing = "explicit";
  if (doc.contains("pricing")) {
    if (!doc["pricing"].is_string()) throw ConfigError(fmt::format("{}: \"pricing\" must be a string", source));
    pricing = doc["pricing"].get<std::string>();
    if (pricing != "explicit" && pricing != "P1") {
      throw ConfigError(fmt::format("{}: unknown pricing model '{}'", source, pricing));
    }
  }

  std::vector<WorkerClass> classes;
  const auto& arr = doc["classes"];
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto& c = arr[k];
    const std::string where = fmt::format("classes[{}]", k);
    if (!c.is_object()) throw ConfigError(fmt::format("{}: {} must be an object", source, where));
    WorkerClass wc;
    wc.name = c.contains("name") && c["name"].is_string() ? c["name"].get<std::string>() : fmt::format("C{}", k + 1);
    if (!c.contains("confusion")) throw ConfigError(fmt::format("{}: {} has no confusion matrix", source, where));
    wc.confusion = parse_confusion(c["confusion"], where, source);
    if (pricing == "P1") {
      wc.price = Money::from_units(p1_price(wc.confusion));
    } else {
      if (!c.contains("price")) throw ConfigError(fmt::format("{}: {} needs a price under explicit pricing", source, where));
      const double p = number_at(c["price"], where + ".price", source);
      if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError(fmt::format("{}: {}.price must be positive", source, where));
      wc.price = Money::from_units(p);
    }
    classes.push_back(std::move(wc));
  }

  Prior prior = Prior::uniform();
  if (doc.contains("prior")) {
    const auto& p = doc["prior"];
    if (!p.is_array() || p.size() != 2) throw ConfigError(fmt::format("{}: \"prior\" must be [w0, w1]", source));
    try {
      prior = Prior(number_at(p[0], "prior[0]", source), number_at(p[1], "prior[1]", source));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("{}: {}", source, e.what()));
    }
  }

  if (name.empty() && doc.contains("name") && doc["name"].is_string()) name = doc["name"].get<std::string>();
  try {
    return Instance(std::move(classes), prior, std::move(name));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open instance file", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  const bool named = doc.is_object() && doc.contains("name") && doc["name"].is_string();
  return instance_from_json(doc, path, named ? std::string{} : std::filesystem::path(path).stem().string());
}

json instance_to_json(const Instance& instance) {
  json classes = json::array();
  for (const auto& c : instance.classes()) {
    const auto& m = c.confusion;
    classes.push_back({{"name", c.name},
                       {"price", c.price.units()},
                       {"confusion", {{m.c0(), 1.0 - m.c1()}, {1.0 - m.c0(), m.c1()}}}});
  }
  json doc = {{"classes", classes},
              {"prior", {instance.prior().w0(), instance.prior().w1()}},
              {"pricing", "explicit"}};
  if (!instance.name().empty()) doc["name"] = instance.name();
  return doc;
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path));
  out << instance_to_json(instance).dump(2) << '\n';
}

Instance bundled_p1_asym() {
  const double diag[5][2] = {{0.94, 0.90}, {0.77, 0.87}, {0.92, 0.76}, {0.88, 0.88}, {0.64, 0.66}};
  std::vector<WorkerClass> classes;
  for (int k = 0; k < 5; ++k) {
    WorkerClass wc;
    wc.name = fmt::format("C{}", k + 1);
    wc.confusion = ConfusionMatrix(diag[k][0], diag[k][1]);
    wc.price = Money::from_units(p1_price(wc.confusion));
    classes.push_back(std::move(wc));
  }
  return Instance(std::move(classes), Prior::uniform(), "P1-Asym");
}

Instance symmetrize(const Instance& instance, std::string name) {
  std::vector<WorkerClass> classes(instance.classes().begin(), instance.classes().end());
  for (auto& c : classes) {
    c.confusion = ConfusionMatrix::symmetric(0.5 * (c.confusion.c0() + c.confusion.c1()));
    c.price = Money::from_units(p1_price(c.confusion));
  }
  return Instance(std::move(classes), instance.prior(), name.empty() ? instance.name() + "-sym" : std::move(name));
}

Instance reprice_p1(const Instance& instance) {
  std::vector<WorkerClass> classes(instance.classes().begin(), instance.classes().end());
  for (auto& c : classes) c.price = Money::from_units(p1_price(c.confusion));
  return Instance(std::move(classes), instance.prior(), instance.name());
}

}  // namespace crowd
