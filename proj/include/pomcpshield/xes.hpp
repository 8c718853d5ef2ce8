#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "pomcpshield/model.hpp"
#include "pomcpshield/trace.hpp"

namespace pomcpshield {

struct XesParseError : std::runtime_error {
  XesParseError(const std::string& what, int line, int col);
  int line;
  int col;
};

struct XesSchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Serializes a trace as an XES event log: one <trace> per run, one <event>
// per step. Event attributes: concept:name (action label), shield:observation,
// and belief:p<selector>_<category> floats; log attributes carry the trace
// metadata. Action labels come from `model`.
void write_xes(const Trace& trace, const Model& model, std::ostream& out);
void write_xes_file(const Trace& trace, const Model& model, const std::string& path);

// Inverse of write_xes. Needs `model` to turn action labels back into ids.
Trace read_xes(std::istream& in, const Model& model);
Trace read_xes_file(const std::string& path, const Model& model);

}  // namespace pomcpshield
