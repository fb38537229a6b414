#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "mlp.hpp"

namespace markovgen {

// FNV-1a, used to fingerprint configurations in checkpoints and sidecars
inline std::string fnv1a64_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// Checkpoint document:
//   { "layer_dims": [..], "weights": [[..row-major..], ..],
//     "biases": [[..], ..], "head_type": "drift"|"jump",
//     "adam_state": {"m_w": [[..]], "v_w": [[..]], "m_b": [[..]],
//                    "v_b": [[..]]},
//     "step": n, "config_hash": "hex" }
inline void save_checkpoint(const std::string& path, const Mlp& m,
                            const std::string& config_hash) {
  nlohmann::json j;
  j["layer_dims"] = m.layer_dims;
  j["weights"] = m.weights;
  j["biases"] = m.biases;
  j["head_type"] = head_name(m.head);
  j["adam_state"] = {{"m_w", m.adam.m_w},
                     {"v_w", m.adam.v_w},
                     {"m_b", m.adam.m_b},
                     {"v_b", m.adam.v_b}};
  j["step"] = m.adam.step;
  j["config_hash"] = config_hash;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoError("short write to " + path);
}

struct LoadedCheckpoint {
  Mlp model;
  std::string config_hash;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  try {
    LoadedCheckpoint lc;
    Mlp& m = lc.model;
    m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    m.head = head_from_name(j.at("head_type").get<std::string>());
    const nlohmann::json& a = j.at("adam_state");
    m.adam.m_w = a.at("m_w").get<std::vector<std::vector<double>>>();
    m.adam.v_w = a.at("v_w").get<std::vector<std::vector<double>>>();
    m.adam.m_b = a.at("m_b").get<std::vector<std::vector<double>>>();
    m.adam.v_b = a.at("v_b").get<std::vector<std::vector<double>>>();
    m.adam.step = j.at("step").get<std::int64_t>();
    lc.config_hash = j.value("config_hash", "");
    for (size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
      const size_t want = static_cast<size_t>(m.layer_dims[l]) *
                          static_cast<size_t>(m.layer_dims[l + 1]);
      if (m.weights.at(l).size() != want ||
          m.biases.at(l).size() != static_cast<size_t>(m.layer_dims[l + 1])) {
        throw IoError(path + ": weight shapes do not chain with layer_dims");
      }
    }
    return lc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

// memory length implied by a drift/jump checkpoint's input width
inline int memory_len_from_input(int in_dim) {
  const int m = (in_dim - 5) / 2;
  if (condition_dim(m) != in_dim) {
    throw std::invalid_argument("input width " + std::to_string(in_dim) +
                                " is not 2(m+1)+3 for any memory length m");
  }
  return m;
}

}  // namespace markovgen
