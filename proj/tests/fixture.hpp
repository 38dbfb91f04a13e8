#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

inline nlohmann::json load_fixture(const std::string& name) {
  std::ifstream f(std::string(QREX_FIXTURES) + "/" + name);
  if (!f) throw std::runtime_error("missing fixture " + name);
  std::stringstream ss;
  ss << f.rdbuf();
  return nlohmann::json::parse(ss.str());
}
