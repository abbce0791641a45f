#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cpgvd/source.hpp"

namespace cpgvd::testing {

inline std::string data_path(const std::string& rel) { return std::string(CPGVD_TEST_DATA) + "/" + rel; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SourceUnit load_fixture(const std::string& rel) {
  return SourceUnit::from_text(rel, read_text(data_path(rel)), data_path(rel));
}

inline const char* kLenToSkbPut =
    "val source = cpg.identifier.name(\"len\")\n"
    "val sink = cpg.call.name(\"skb_put\").where(_.argument.order(2).codeExact(\"len + ring->frameoffset\"))\n"
    "val execution_paths = sink.reachableByFlows(source)\n";

}  // namespace cpgvd::testing
