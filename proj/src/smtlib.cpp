#include "pomcpshield/smtlib.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pomcpshield {

namespace {

// Decimal literal without exponent notation, exact under strtod round-trip.
std::string smt_literal(double v) {
  if (v < 0.0) return "(- " + smt_literal(-v) + ")";
  char buf[512];
  for (int prec = 1; prec <= 60; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s(buf);
  std::size_t last = s.find_last_not_of('0');
  if (s[last] == '.') ++last;
  return s.substr(0, last + 1);
}

const char* smt_cmp(Cmp cmp) {
  switch (cmp) {
    case Cmp::Lt: return "<";
    case Cmp::Gt: return ">";
    case Cmp::Le: return "<=";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

const char* smt_req_op(ReqOp op) {
  switch (op) {
    case ReqOp::Eq: return "=";
    case ReqOp::Lt: return "<";
    case ReqOp::Gt: return ">";
    case ReqOp::Le: return "<=";
    case ReqOp::Ge: return ">=";
  }
  return "?";
}

std::string body_sexpr(const GroundClause& cl, const MaxSmtProblem& p) {
  std::vector<std::string> conjs;
  for (const auto& conj : cl.disjuncts) {
    std::vector<std::string> atoms;
    for (const GroundAtom& a : conj) {
      std::string rhs = a.is_var ? p.classes[a.var_class].vars.front() : smt_literal(a.constant);
      // Merged classes are represented by their first variable; the equality
      // requirements asserted alongside keep the other members in step.
      atoms.push_back("(" + std::string(smt_cmp(a.cmp)) + " " + smt_literal(a.lhs) + " " + rhs + ")");
    }
    if (atoms.size() == 1) {
      conjs.push_back(atoms.front());
    } else {
      std::string s = "(and";
      for (const std::string& t : atoms) s += " " + t;
      conjs.push_back(s + ")");
    }
  }
  std::string body;
  if (conjs.size() == 1) {
    body = conjs.front();
  } else {
    body = "(or";
    for (const std::string& t : conjs) body += " " + t;
    body += ")";
  }
  if (cl.negated) body = "(not " + body + ")";
  return body;
}

struct Sx {
  bool is_list = false;
  std::string atom;
  std::vector<Sx> items;
};

std::vector<Sx> parse_sexprs(const std::string& text) {
  std::vector<Sx> stack_marker;
  std::vector<std::vector<Sx>> stack;
  stack.emplace_back();
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (std::isspace((unsigned char)c)) {
      ++i;
    } else if (c == '(') {
      stack.emplace_back();
      ++i;
    } else if (c == ')') {
      if (stack.size() < 2) throw std::runtime_error("unbalanced ')' in solver output");
      Sx list;
      list.is_list = true;
      list.items = std::move(stack.back());
      stack.pop_back();
      stack.back().push_back(std::move(list));
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace((unsigned char)text[j]) && text[j] != '(' && text[j] != ')' &&
             text[j] != ';')
        ++j;
      Sx atom;
      atom.atom = text.substr(i, j - i);
      stack.back().push_back(std::move(atom));
      i = j;
    }
  }
  if (stack.size() != 1) throw std::runtime_error("unbalanced '(' in solver output");
  return std::move(stack.front());
}

double numeric_value(const Sx& v) {
  if (!v.is_list) {
    char* end = nullptr;
    double d = std::strtod(v.atom.c_str(), &end);
    if (end == v.atom.c_str() || *end != '\0')
      throw std::runtime_error("unexpected model value '" + v.atom + "'");
    return d;
  }
  if (v.items.size() == 3 && !v.items[0].is_list && v.items[0].atom == "/")
    return numeric_value(v.items[1]) / numeric_value(v.items[2]);
  if (v.items.size() == 2 && !v.items[0].is_list && v.items[0].atom == "-")
    return -numeric_value(v.items[1]);
  throw std::runtime_error("unsupported model value expression");
}

}  // namespace

std::string dummy_name(const GroundClause& cl) {
  return "l_" + std::to_string(cl.rule_index) + "_" + std::to_string(cl.run_index) + "_" +
         std::to_string(cl.step_index);
}

std::string emit_smtlib(const MaxSmtProblem& p) {
  std::ostringstream out;
  out << "(set-option :produce-models true)\n";
  out << "(set-logic QF_LRA)\n";
  const std::vector<std::string>& vars = p.tmpl.free_vars;
  for (const std::string& v : vars) {
    out << "(declare-const " << v << " Real)\n";
    out << "(assert (<= 0.0 " << v << "))\n";
    out << "(assert (<= " << v << " 1.0))\n";
  }
  for (const Requirement& req : p.tmpl.requirements) {
    std::string rhs = req.rhs.is_var ? req.rhs.var : smt_literal(req.rhs.constant);
    out << "(assert (" << smt_req_op(req.op) << " " << req.lhs << " " << rhs << "))\n";
  }
  for (const GroundClause& cl : p.clauses) {
    const std::string name = dummy_name(cl);
    out << "(declare-const " << name << " Bool)\n";
    out << "(assert (or " << name << " " << body_sexpr(cl, p) << "))\n";
    out << "(assert-soft (not " << name << ") :weight 1)\n";
  }
  out << "(check-sat)\n";
  out << "(get-value (";
  bool first = true;
  for (const std::string& v : vars) {
    if (!first) out << " ";
    out << v;
    first = false;
  }
  for (const GroundClause& cl : p.clauses) {
    if (!first) out << " ";
    out << dummy_name(cl);
    first = false;
  }
  out << "))\n";
  return out.str();
}

SmtModel parse_smtlib_model(const std::string& text) {
  SmtModel model;
  std::vector<Sx> forms = parse_sexprs(text);
  for (const Sx& f : forms) {
    if (!f.is_list) {
      if (f.atom == "unsat") throw UnsatError("solver reported unsat");
      continue;
    }
    for (const Sx& item : f.items) {
      if (!item.is_list || item.items.size() != 2 || item.items[0].is_list) continue;
      const std::string& name = item.items[0].atom;
      const Sx& val = item.items[1];
      if (!val.is_list && (val.atom == "true" || val.atom == "false")) {
        model.bools[name] = val.atom == "true";
      } else {
        model.reals[name] = numeric_value(val);
      }
    }
  }
  return model;
}

LearnedRule solve_with_external(const MaxSmtProblem& p, const std::string& command, TightenMode mode) {
  static std::atomic<unsigned> counter{0};
  auto ticks = std::chrono::steady_clock::now().time_since_epoch().count();
  std::filesystem::path path =
      std::filesystem::temp_directory_path() /
      ("pomcpshield-" + std::to_string(ticks) + "-" + std::to_string(counter++) + ".smt2");
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << emit_smtlib(p);
  }

  std::string output;
  try {
    std::string cmd = command + " " + path.string() + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot run solver command '" + command + "'");
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
    pclose(pipe);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    throw;
  }
  std::error_code ec;
  std::filesystem::remove(path, ec);

  SmtModel model = parse_smtlib_model(output);
  std::vector<double> vals(p.classes.size(), 0.0);
  for (std::size_t k = 0; k < p.classes.size(); ++k) {
    auto it = model.reals.find(p.classes[k].vars.front());
    if (it == model.reals.end())
      throw std::runtime_error("solver model lacks a value for '" + p.classes[k].vars.front() + "'");
    vals[k] = it->second;
  }

  // Violations are recomputed from the numeric assignment rather than read
  // off the relaxation literals, keeping the semantics identical to the
  // internal backend.
  int total = 0;
  std::vector<int> violated;
  for (std::size_t ci = 0; ci < p.clauses.size(); ++ci) {
    if (clause_violated(p.clauses[ci], vals)) {
      ++total;
      violated.push_back((int)ci);
    }
  }
  if (mode != TightenMode::None) vals = tighten(p, vals, mode);

  LearnedRule out;
  out.tmpl = p.tmpl;
  out.assignment = to_assignment(p, vals);
  out.objective_value = total;
  out.violated = std::move(violated);
  for (int ci : out.violated) {
    const GroundClause& cl = p.clauses[ci];
    out.violated_refs.push_back({cl.rule_index, cl.run_index, cl.step_index});
  }
  return out;
}

}  // namespace pomcpshield
