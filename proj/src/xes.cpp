#include "pomcpshield/xes.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace pomcpshield {

XesParseError::XesParseError(const std::string& what, int line_, int col_)
    : std::runtime_error(what + " at line " + std::to_string(line_) + ", column " +
                         std::to_string(col_)),
      line(line_),
      col(col_) {}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Minimal DOM for attribute-only XML of the shape XES uses.
struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlNode> children;

  const std::string* find_attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

class XmlParser {
 public:
  explicit XmlParser(std::string text) : text_(std::move(text)) {}

  XmlNode parse_document() {
    skip_misc();
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ != text_.size()) fail("trailing content after document element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw XesParseError(msg, line_, col_); }

  bool eof() const { return pos_ >= text_.size(); }

  char peek() const {
    if (eof()) fail("unexpected end of input");
    return text_[pos_];
  }

  char get() {
    const char c = peek();
    ++pos_;
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  bool consume_if(const std::string& s) {
    if (text_.compare(pos_, s.size(), s) != 0) return false;
    for (std::size_t i = 0; i < s.size(); ++i) get();
    return true;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
  }

  // Whitespace, the XML declaration, comments, and processing instructions.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (consume_if("<?")) {
        while (!consume_if("?>")) get();
      } else if (consume_if("<!--")) {
        while (!consume_if("-->")) get();
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    std::string name;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '_' || c == '-' ||
          c == '.') {
        name += get();
      } else {
        break;
      }
    }
    if (name.empty()) fail("expected a name");
    return name;
  }

  std::string parse_attr_value() {
    expect('"');
    std::string value;
    for (;;) {
      const char c = get();
      if (c == '"') break;
      if (c == '&') {
        std::string ent;
        for (;;) {
          const char e = get();
          if (e == ';') break;
          ent += e;
          if (ent.size() > 8) fail("malformed entity reference");
        }
        if (ent == "amp") {
          value += '&';
        } else if (ent == "lt") {
          value += '<';
        } else if (ent == "gt") {
          value += '>';
        } else if (ent == "quot") {
          value += '"';
        } else if (ent == "apos") {
          value += '\'';
        } else {
          fail("unknown entity reference '&" + ent + ";'");
        }
      } else {
        value += c;
      }
    }
    return value;
  }

  XmlNode parse_element() {
    expect('<');
    XmlNode node;
    node.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag");
      if (peek() == '/') {
        get();
        expect('>');
        return node;
      }
      if (peek() == '>') {
        get();
        break;
      }
      std::string key = parse_name();
      skip_ws();
      expect('=');
      skip_ws();
      node.attrs.emplace_back(std::move(key), parse_attr_value());
    }
    for (;;) {
      skip_misc();
      if (eof()) fail("unterminated element <" + node.name + ">");
      if (peek() != '<') fail("unexpected text content inside <" + node.name + ">");
      if (consume_if("</")) {
        const std::string closing = parse_name();
        if (closing != node.name) {
          fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
        }
        skip_ws();
        expect('>');
        return node;
      }
      node.children.push_back(parse_element());
    }
  }

  std::string text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

void write_attr(std::ostream& out, int indent, const char* type, const std::string& key,
                const std::string& value) {
  for (int i = 0; i < indent; ++i) out << ' ';
  out << '<' << type << " key=\"" << xml_escape(key) << "\" value=\"" << xml_escape(value)
      << "\"/>\n";
}

const std::string& require_attr(const XmlNode& node, const std::string& key) {
  for (const auto& child : node.children) {
    if (const std::string* k = child.find_attr("key"); k && *k == key) {
      if (const std::string* val = child.find_attr("value")) return *val;
      throw XesSchemaError("attribute '" + key + "' has no value");
    }
  }
  throw XesSchemaError("missing required attribute '" + key + "'");
}

double parse_double_attr(const std::string& text, const std::string& key) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw XesSchemaError("attribute '" + key + "' is not a number: '" + text + "'");
  }
}

long long parse_int_attr(const std::string& text, const std::string& key) {
  try {
    std::size_t consumed = 0;
    const long long v = std::stoll(text, &consumed);
    if (consumed != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw XesSchemaError("attribute '" + key + "' is not an integer: '" + text + "'");
  }
}

Step parse_event(const XmlNode& event, const Model& model) {
  Step step;
  step.action = model.action_from_label(require_attr(event, "concept:name"));
  step.observation = static_cast<ObservationId>(
      parse_int_attr(require_attr(event, "shield:observation"), "shield:observation"));
  // Belief attributes are keyed belief:p<selector>_<category>.
  std::map<int, std::map<int, double>> by_selector;
  for (const auto& child : event.children) {
    const std::string* k = child.find_attr("key");
    if (!k || k->rfind("belief:p", 0) != 0) continue;
    const std::string rest = k->substr(8);
    const std::size_t us = rest.find('_');
    if (us == std::string::npos) throw XesSchemaError("malformed belief attribute key '" + *k + "'");
    int sel = 0;
    int cat = 0;
    try {
      sel = std::stoi(rest.substr(0, us));
      cat = std::stoi(rest.substr(us + 1));
    } catch (const std::exception&) {
      throw XesSchemaError("malformed belief attribute key '" + *k + "'");
    }
    const std::string* val = child.find_attr("value");
    if (!val) throw XesSchemaError("attribute '" + *k + "' has no value");
    by_selector[sel][cat] = parse_double_attr(*val, *k);
  }
  if (by_selector.empty()) throw XesSchemaError("missing required attribute 'belief:p0_0'");
  const int selector_count = by_selector.rbegin()->first + 1;
  step.beliefs.resize(static_cast<std::size_t>(selector_count));
  for (int sel = 0; sel < selector_count; ++sel) {
    auto it = by_selector.find(sel);
    if (it == by_selector.end()) {
      throw XesSchemaError("missing belief attributes for selector " + std::to_string(sel));
    }
    const int cats = it->second.rbegin()->first + 1;
    ProbVector probs(static_cast<std::size_t>(cats), 0.0);
    for (int c = 0; c < cats; ++c) {
      auto cit = it->second.find(c);
      if (cit == it->second.end()) {
        throw XesSchemaError("missing required attribute 'belief:p" + std::to_string(sel) + "_" +
                             std::to_string(c) + "'");
      }
      probs[static_cast<std::size_t>(c)] = cit->second;
    }
    step.beliefs[static_cast<std::size_t>(sel)] = std::move(probs);
  }
  for (const auto& child : event.children) {
    const std::string* k = child.find_attr("key");
    if (!k || *k != "shield:particles_raw") continue;
    const std::string* val = child.find_attr("value");
    if (!val) throw XesSchemaError("attribute 'shield:particles_raw' has no value");
    std::istringstream ss(*val);
    StateId s;
    while (ss >> s) step.raw_particles.push_back(s);
  }
  return step;
}

}  // namespace

void write_xes(const Trace& trace, const Model& model, std::ostream& out) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<log xes.version=\"2.0\" xes.features=\"\">\n";
  write_attr(out, 2, "string", "shield:domain", trace.domain);
  write_attr(out, 2, "int", "shield:particles", std::to_string(trace.particles));
  write_attr(out, 2, "float", "shield:c", format_float(trace.c));
  write_attr(out, 2, "int", "shield:seed", std::to_string(trace.seed));
  for (std::size_t r = 0; r < trace.runs.size(); ++r) {
    out << "  <trace>\n";
    write_attr(out, 4, "string", "concept:name", "run_" + std::to_string(r));
    for (const Step& step : trace.runs[r]) {
      out << "    <event>\n";
      write_attr(out, 6, "string", "concept:name", model.action_label(step.action));
      write_attr(out, 6, "int", "shield:observation", std::to_string(step.observation));
      for (std::size_t sel = 0; sel < step.beliefs.size(); ++sel) {
        const ProbVector& probs = step.beliefs[sel];
        for (std::size_t c = 0; c < probs.size(); ++c) {
          write_attr(out, 6, "float",
                     "belief:p" + std::to_string(sel) + "_" + std::to_string(c),
                     format_float(probs[c]));
        }
      }
      if (!step.raw_particles.empty()) {
        std::string packed;
        for (std::size_t i = 0; i < step.raw_particles.size(); ++i) {
          if (i) packed += ' ';
          packed += std::to_string(step.raw_particles[i]);
        }
        write_attr(out, 6, "string", "shield:particles_raw", packed);
      }
      out << "    </event>\n";
    }
    out << "  </trace>\n";
  }
  out << "</log>\n";
}

void write_xes_file(const Trace& trace, const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_xes(trace, model, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

Trace read_xes(std::istream& in, const Model& model) {
  std::stringstream ss;
  ss << in.rdbuf();
  XmlParser parser(ss.str());
  const XmlNode root = parser.parse_document();
  if (root.name != "log") throw XesSchemaError("document element is <" + root.name + ">, not <log>");
  Trace trace;
  trace.domain = require_attr(root, "shield:domain");
  trace.particles = static_cast<int>(parse_int_attr(require_attr(root, "shield:particles"),
                                                    "shield:particles"));
  trace.c = parse_double_attr(require_attr(root, "shield:c"), "shield:c");
  trace.seed = static_cast<std::uint64_t>(parse_int_attr(require_attr(root, "shield:seed"),
                                                         "shield:seed"));
  for (const XmlNode& child : root.children) {
    if (child.name != "trace") continue;
    Run run;
    for (const XmlNode& ev : child.children) {
      if (ev.name != "event") continue;
      run.push_back(parse_event(ev, model));
    }
    trace.runs.push_back(std::move(run));
  }
  return trace;
}

Trace read_xes_file(const std::string& path, const Model& model) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return read_xes(in, model);
}

}  // namespace pomcpshield
