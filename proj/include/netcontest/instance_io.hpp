#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netcontest/errors.hpp"
#include "netcontest/instance.hpp"

namespace netcontest {

using Json = nlohmann::json;

struct InstanceDocument {
  ContestInstance instance;
  std::optional<Certificate> certificate;
};

namespace detail {

inline Json parse_json(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline double read_number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "expected a number");
  return j.get<double>();
}

inline Player read_index(const Json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<Player>();
  if (j.is_number_integer()) throw ValidationError(field, "index must be nonnegative");
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d >= 0.0 && std::floor(d) == d) return static_cast<Player>(d);
  }
  throw ValidationError(field, "expected a nonnegative integer index");
}

inline const Json& require(const Json& doc, const char* key) {
  if (!doc.is_object()) throw ValidationError("$", "expected a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(key, "missing");
  return *it;
}

inline std::vector<std::pair<Player, Player>> read_arcs(const Json& arr, const std::string& key) {
  if (!arr.is_array()) throw ValidationError(key, "expected an array");
  std::vector<std::pair<Player, Player>> arcs;
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string field = key + "[" + std::to_string(k) + "]";
    if (!arr[k].is_array() || arr[k].size() != 2)
      throw ValidationError(field, "expected [from, to]");
    arcs.emplace_back(read_index(arr[k][0], field), read_index(arr[k][1], field));
  }
  return arcs;
}

inline std::optional<Certificate> read_certificate(const Json& doc) {
  auto it = doc.find("certificate");
  if (it == doc.end() || it->is_null()) return std::nullopt;
  const Json& c = *it;
  if (!c.is_object()) throw ValidationError("certificate", "expected an object");
  Certificate cert;
  cert.donor = read_index(require(c, "donor"), "certificate.donor");
  cert.recipient = read_index(require(c, "recipient"), "certificate.recipient");
  cert.dU_donor = read_number(require(c, "dU_donor"), "certificate.dU_donor");
  cert.dU_recipient = read_number(require(c, "dU_recipient"), "certificate.dU_recipient");
  if (c.contains("epsilon")) cert.epsilon = read_number(c["epsilon"], "certificate.epsilon");
  return cert;
}

}  // namespace detail

inline InstanceDocument instance_from_json(const Json& doc) {
  const Json& budgets_json = detail::require(doc, "budgets");
  if (!budgets_json.is_array()) throw ValidationError("budgets", "expected an array");
  std::vector<double> budgets;
  for (std::size_t k = 0; k < budgets_json.size(); ++k)
    budgets.push_back(detail::read_number(budgets_json[k], "budgets[" + std::to_string(k) + "]"));

  const Json& edges_json = detail::require(doc, "edges");
  if (!edges_json.is_array()) throw ValidationError("edges", "expected an array");
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < edges_json.size(); ++k) {
    const std::string field = "edges[" + std::to_string(k) + "]";
    const Json& e = edges_json[k];
    if (!e.is_array() || e.size() != 3) throw ValidationError(field, "expected [i, j, value]");
    edges.push_back({detail::read_index(e[0], field), detail::read_index(e[1], field),
                     detail::read_number(e[2], field)});
  }

  DonationGraph donations;
  if (auto it = doc.find("donation_arcs"); it != doc.end())
    donations = DonationGraph(detail::read_arcs(*it, "donation_arcs"));

  InstanceDocument out{ContestInstance(std::move(budgets), std::move(edges), std::move(donations)),
                       detail::read_certificate(doc)};
  if (out.certificate) {
    const std::size_t n = out.instance.size();
    if (out.certificate->donor >= n || out.certificate->recipient >= n)
      throw ValidationError("certificate", "player index out of range");
  }
  return out;
}

inline Json instance_to_json(const ContestInstance& inst,
                             const std::optional<Certificate>& cert = std::nullopt) {
  Json doc;
  doc["budgets"] = std::vector<double>(inst.budgets().begin(), inst.budgets().end());
  Json edges = Json::array();
  for (const Edge& e : inst.edges()) edges.push_back(Json::array({e.i, e.j, e.value}));
  doc["edges"] = std::move(edges);
  if (!inst.donations().empty()) {
    Json arcs = Json::array();
    for (auto [from, to] : inst.donations().arcs()) arcs.push_back(Json::array({from, to}));
    doc["donation_arcs"] = std::move(arcs);
  }
  if (cert) {
    doc["certificate"] = {{"donor", cert->donor},
                          {"recipient", cert->recipient},
                          {"dU_donor", cert->dU_donor},
                          {"dU_recipient", cert->dU_recipient},
                          {"epsilon", cert->epsilon}};
  }
  return doc;
}

inline InstanceDocument load_instance_document(std::istream& in) {
  return instance_from_json(detail::parse_json(in));
}

inline ContestInstance load_instance(std::istream& in) {
  return load_instance_document(in).instance;
}

inline ContestInstance parse_instance(const std::string& text) {
  std::istringstream in(text);
  return load_instance(in);
}

inline void save_instance(std::ostream& out, const ContestInstance& inst,
                          const std::optional<Certificate>& cert = std::nullopt) {
  out << instance_to_json(inst, cert).dump(2) << '\n';
  if (!out) throw IOError("failed to write instance");
}

/// Topology-only input: edges as [i, j] or [i, j, value]; "n" optional,
/// otherwise one more than the largest index. Budgets and values are ignored.
inline Topology load_topology(std::istream& in) {
  const Json doc = detail::parse_json(in);
  const Json& edges_json = detail::require(doc, "edges");
  if (!edges_json.is_array()) throw ValidationError("edges", "expected an array");
  std::vector<std::pair<Player, Player>> pairs;
  std::size_t n = 0;
  for (std::size_t k = 0; k < edges_json.size(); ++k) {
    const std::string field = "edges[" + std::to_string(k) + "]";
    const Json& e = edges_json[k];
    if (!e.is_array() || e.size() < 2 || e.size() > 3)
      throw ValidationError(field, "expected [i, j] or [i, j, value]");
    const Player i = detail::read_index(e[0], field);
    const Player j = detail::read_index(e[1], field);
    pairs.emplace_back(i, j);
    n = std::max({n, i + 1, j + 1});
  }
  if (auto it = doc.find("n"); it != doc.end()) {
    n = detail::read_index(*it, "n");
  } else if (auto b = doc.find("budgets"); b != doc.end() && b->is_array()) {
    n = std::max(n, b->size());
  }
  return Topology(n, std::move(pairs));
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path);
  return in;
}

inline InstanceDocument load_instance_file(const std::string& path) {
  auto in = open_input(path);
  return load_instance_document(in);
}

inline Topology load_topology_file(const std::string& path) {
  auto in = open_input(path);
  return load_topology(in);
}

}  // namespace netcontest
