#pragma once

#include "coupled_elast/core.hpp"

#include <regex>
#include <string>

namespace coupled_elast {

/// Discretization choice: "hz{k}+l{m}" (coupled), "lagrange{m}", or "hz{k}".
struct MethodConfig {
  enum class Kind { coupled, lagrange, huzhang };
  Kind kind = Kind::coupled;
  int k = 3;  // Hu-Zhang stress degree (unused for pure Lagrange)
  int m = 4;  // Lagrange degree (unused for pure Hu-Zhang)

  bool has_mixed() const { return kind != Kind::lagrange; }
  bool has_primal() const { return kind != Kind::huzhang; }

  std::string name() const {
    switch (kind) {
      case Kind::coupled: return "hz" + std::to_string(k) + "+l" + std::to_string(m);
      case Kind::lagrange: return "lagrange" + std::to_string(m);
      case Kind::huzhang: return "hz" + std::to_string(k);
    }
    return {};
  }

  static MethodConfig parse(const std::string& s) {
    static const std::regex coupled(R"(hz(\d+)\+l(\d+))"), lagrange(R"(lagrange(\d+))"), mixed(R"(hz(\d+))");
    std::smatch mt;
    MethodConfig c;
    if (std::regex_match(s, mt, coupled)) {
      c = {Kind::coupled, std::stoi(mt[1]), std::stoi(mt[2])};
    } else if (std::regex_match(s, mt, lagrange)) {
      c = {Kind::lagrange, 0, std::stoi(mt[1])};
    } else if (std::regex_match(s, mt, mixed)) {
      c = {Kind::huzhang, std::stoi(mt[1]), 0};
    } else {
      throw ConfigError("unknown method '" + s + "' (expected hz{k}+l{m}, lagrange{m} or hz{k})");
    }
    if (c.has_mixed() && c.k < 3) throw ConfigError("method " + s + ": Hu-Zhang degree must be >= 3");
    if (c.has_mixed() && c.k > 6) throw ConfigError("method " + s + ": Hu-Zhang degree above 6 is not supported");
    if (c.has_primal() && (c.m < 1 || c.m > 8)) throw ConfigError("method " + s + ": Lagrange degree must be in [1, 8]");
    return c;
  }
};

}  // namespace coupled_elast
