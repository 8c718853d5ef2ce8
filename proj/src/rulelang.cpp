#include "pomcpshield/rulelang.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace pomcpshield {

RuleParseError::RuleParseError(const std::string& what, int line_, int col_)
    : std::runtime_error(what + " at line " + std::to_string(line_) + ", column " +
                         std::to_string(col_)),
      line(line_),
      col(col_) {}

namespace {

enum class Tok {
  Id,
  Num,
  Colon,
  Semicolon,
  LParen,
  RParen,
  Comma,
  Lt,
  Gt,
  Le,
  Ge,
  Eq,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) step();
      if (pos_ < text_.size() && text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') step();
        continue;
      }
      break;
    }
    current_.line = line_;
    current_.col = col_;
    if (pos_ >= text_.size()) {
      current_.kind = Tok::End;
      current_.text = "<end of input>";
      return;
    }
    const char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (pos_ < text_.size()) {
        const char d = text_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
          id += d;
          step();
        } else {
          break;
        }
      }
      current_.kind = Tok::Id;
      current_.text = std::move(id);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      std::string num;
      bool seen_dot = false;
      while (pos_ < text_.size()) {
        const char d = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          num += d;
          step();
        } else if (d == '.' && !seen_dot) {
          seen_dot = true;
          num += d;
          step();
        } else {
          break;
        }
      }
      current_.kind = Tok::Num;
      current_.text = num;
      current_.number = std::strtod(num.c_str(), nullptr);
      return;
    }
    switch (c) {
      case ':':
        step();
        current_ = {Tok::Colon, ":", 0.0, current_.line, current_.col};
        return;
      case ';':
        step();
        current_ = {Tok::Semicolon, ";", 0.0, current_.line, current_.col};
        return;
      case '(':
        step();
        current_ = {Tok::LParen, "(", 0.0, current_.line, current_.col};
        return;
      case ')':
        step();
        current_ = {Tok::RParen, ")", 0.0, current_.line, current_.col};
        return;
      case ',':
        step();
        current_ = {Tok::Comma, ",", 0.0, current_.line, current_.col};
        return;
      case '=':
        step();
        current_ = {Tok::Eq, "=", 0.0, current_.line, current_.col};
        return;
      case '<':
        step();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          step();
          current_ = {Tok::Le, "<=", 0.0, current_.line, current_.col};
        } else {
          current_ = {Tok::Lt, "<", 0.0, current_.line, current_.col};
        }
        return;
      case '>':
        step();
        if (pos_ < text_.size() && text_[pos_] == '=') {
          step();
          current_ = {Tok::Ge, ">=", 0.0, current_.line, current_.col};
        } else {
          current_ = {Tok::Gt, ">", 0.0, current_.line, current_.col};
        }
        return;
      default:
        throw RuleParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }
  }

  void step() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token current_;
};

// Boolean expression tree used only during parsing; bodies are normalized to
// disjunctions of conjunctions before they leave the parser.
struct BoolExpr {
  enum class Kind { Atom, And, Or } kind;
  Atom atom;
  std::vector<BoolExpr> operands;
};

std::vector<Conjunction> to_dnf(const BoolExpr& e) {
  switch (e.kind) {
    case BoolExpr::Kind::Atom:
      return {{e.atom}};
    case BoolExpr::Kind::Or: {
      std::vector<Conjunction> out;
      for (const BoolExpr& op : e.operands) {
        auto sub = to_dnf(op);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    case BoolExpr::Kind::And: {
      std::vector<Conjunction> out{{}};
      for (const BoolExpr& op : e.operands) {
        const auto sub = to_dnf(op);
        std::vector<Conjunction> next;
        for (const Conjunction& left : out) {
          for (const Conjunction& right : sub) {
            Conjunction joined = left;
            joined.insert(joined.end(), right.begin(), right.end());
            next.push_back(std::move(joined));
          }
        }
        out = std::move(next);
      }
      return out;
    }
  }
  return {};
}

class Parser {
 public:
  Parser(const std::string& text, const Model* model) : lex_(text), model_(model) {}

  RuleTemplate parse() {
    RuleTemplate tmpl;
    if (lex_.peek().kind == Tok::End) {
      throw RuleParseError("empty input: expected at least one action rule", 1, 1);
    }
    while (lex_.peek().kind == Tok::Id && lex_.peek().text != "where") {
      tmpl.action_rules.push_back(parse_action_rule());
    }
    if (tmpl.action_rules.empty()) {
      fail("expected an action rule");
    }
    if (lex_.peek().kind == Tok::Id && lex_.peek().text == "where") {
      lex_.take();
      tmpl.requirements.push_back(parse_requirement());
      while (lex_.peek().kind == Tok::Id && lex_.peek().text == "and") {
        lex_.take();
        tmpl.requirements.push_back(parse_requirement());
      }
      expect(Tok::Semicolon, "';' after the where clause");
    }
    if (lex_.peek().kind != Tok::End) fail("expected end of input");
    finalize(tmpl);
    return tmpl;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = lex_.peek();
    throw RuleParseError("syntax error: " + msg + " (got '" + t.text + "')", t.line, t.col);
  }

  Token expect(Tok kind, const std::string& what) {
    if (lex_.peek().kind != kind) fail("expected " + what);
    return lex_.take();
  }

  Token expect_keyword(const std::string& word) {
    if (lex_.peek().kind != Tok::Id || lex_.peek().text != word) {
      fail("expected '" + word + "'");
    }
    return lex_.take();
  }

  ActionRuleTemplate parse_action_rule() {
    ActionRuleTemplate rule;
    rule.rule_name = expect(Tok::Id, "a rule name").text;
    expect(Tok::Colon, "':' after the rule name");
    expect_keyword("select");
    rule.action_label = expect(Tok::Id, "an action label").text;
    expect_keyword("when");
    const BoolExpr body = parse_or();
    expect(Tok::Semicolon, "';' after the rule body");
    rule.disjuncts = to_dnf(body);
    return rule;
  }

  BoolExpr parse_or() {
    BoolExpr e = parse_and();
    if (lex_.peek().kind == Tok::Id && lex_.peek().text == "or") {
      BoolExpr out{BoolExpr::Kind::Or, {}, {std::move(e)}};
      while (lex_.peek().kind == Tok::Id && lex_.peek().text == "or") {
        lex_.take();
        out.operands.push_back(parse_and());
      }
      return out;
    }
    return e;
  }

  BoolExpr parse_and() {
    BoolExpr e = parse_primary();
    if (lex_.peek().kind == Tok::Id && lex_.peek().text == "and") {
      BoolExpr out{BoolExpr::Kind::And, {}, {std::move(e)}};
      while (lex_.peek().kind == Tok::Id && lex_.peek().text == "and") {
        lex_.take();
        out.operands.push_back(parse_primary());
      }
      return out;
    }
    return e;
  }

  BoolExpr parse_primary() {
    if (lex_.peek().kind == Tok::LParen) {
      lex_.take();
      BoolExpr e = parse_or();
      expect(Tok::RParen, "')'");
      return e;
    }
    return BoolExpr{BoolExpr::Kind::Atom, parse_atom(), {}};
  }

  Atom parse_atom() {
    Atom atom;
    atom.sel = parse_selector();
    atom.cmp = parse_cmp();
    atom.rhs = parse_operand();
    if (!atom.rhs.is_var && (atom.rhs.constant < 0.0 || atom.rhs.constant > 1.0)) {
      fail("atom constant must lie in [0,1]");
    }
    return atom;
  }

  SelectorRef parse_selector() {
    const Token t = lex_.peek();
    if (t.kind != Tok::Id) fail("expected a selector (p_<label> or diff(distr, seg, <i>))");
    if (t.text == "diff") {
      lex_.take();
      expect(Tok::LParen, "'(' after diff");
      expect_keyword("distr");
      expect(Tok::Comma, "','");
      expect_keyword("seg");
      expect(Tok::Comma, "','");
      const Token idx = expect(Tok::Num, "a category index");
      if (idx.text.find('.') != std::string::npos) {
        throw RuleParseError("category index must be an integer", idx.line, idx.col);
      }
      expect(Tok::RParen, "')'");
      SelectorRef sel;
      sel.kind = SelectorRef::Kind::CategoryIndex;
      sel.index = static_cast<int>(idx.number);
      return sel;
    }
    if (t.text.rfind("p_", 0) == 0 && t.text.size() > 2) {
      lex_.take();
      SelectorRef sel;
      sel.kind = SelectorRef::Kind::CategoryLabel;
      sel.label = t.text.substr(2);
      return sel;
    }
    fail("expected a selector (p_<label> or diff(distr, seg, <i>))");
  }

  Cmp parse_cmp() {
    switch (lex_.peek().kind) {
      case Tok::Lt:
        lex_.take();
        return Cmp::Lt;
      case Tok::Gt:
        lex_.take();
        return Cmp::Gt;
      case Tok::Le:
        lex_.take();
        return Cmp::Le;
      case Tok::Ge:
        lex_.take();
        return Cmp::Ge;
      default:
        fail("expected a comparison operator (<, >, <=, >=)");
    }
  }

  Operand parse_operand() {
    const Token t = lex_.peek();
    if (t.kind == Tok::Num) {
      lex_.take();
      return Operand::literal(t.number);
    }
    if (t.kind == Tok::Id) {
      lex_.take();
      return Operand::variable(t.text);
    }
    fail("expected a free variable or a numeric constant");
  }

  Requirement parse_requirement() {
    const bool parened = lex_.peek().kind == Tok::LParen;
    if (parened) lex_.take();
    Requirement req;
    req.lhs = expect(Tok::Id, "a free variable").text;
    switch (lex_.peek().kind) {
      case Tok::Eq:
        lex_.take();
        req.op = ReqOp::Eq;
        break;
      case Tok::Lt:
        lex_.take();
        req.op = ReqOp::Lt;
        break;
      case Tok::Gt:
        lex_.take();
        req.op = ReqOp::Gt;
        break;
      case Tok::Le:
        lex_.take();
        req.op = ReqOp::Le;
        break;
      case Tok::Ge:
        lex_.take();
        req.op = ReqOp::Ge;
        break;
      default:
        fail("expected '=', '<', '>', '<=' or '>=' in a requirement");
    }
    req.rhs = parse_operand();
    if (!req.rhs.is_var && (req.rhs.constant < 0.0 || req.rhs.constant > 1.0)) {
      fail("requirement constant must lie in [0,1]");
    }
    if (parened) expect(Tok::RParen, "')'");
    return req;
  }

  void finalize(RuleTemplate& tmpl) {
    std::vector<std::string> seen_actions;
    for (const auto& rule : tmpl.action_rules) {
      if (std::find(seen_actions.begin(), seen_actions.end(), rule.action_label) !=
          seen_actions.end()) {
        throw RuleParseError("duplicate action rule for '" + rule.action_label + "'", 1, 1);
      }
      seen_actions.push_back(rule.action_label);
    }
    auto note_var = [&](const std::string& name) {
      if (std::find(tmpl.free_vars.begin(), tmpl.free_vars.end(), name) == tmpl.free_vars.end()) {
        tmpl.free_vars.push_back(name);
      }
    };
    for (const auto& rule : tmpl.action_rules) {
      for (const auto& conj : rule.disjuncts) {
        for (const auto& atom : conj) {
          if (atom.rhs.is_var) note_var(atom.rhs.var);
        }
      }
    }
    for (const auto& req : tmpl.requirements) {
      auto used = [&](const std::string& name) {
        return std::find(tmpl.free_vars.begin(), tmpl.free_vars.end(), name) !=
               tmpl.free_vars.end();
      };
      if (!used(req.lhs)) {
        throw RuleParseError("requirement references '" + req.lhs +
                                 "', which appears in no atom",
                             1, 1);
      }
      if (req.rhs.is_var && !used(req.rhs.var)) {
        throw RuleParseError("requirement references '" + req.rhs.var +
                                 "', which appears in no atom",
                             1, 1);
      }
    }
    if (model_) resolve_actions(tmpl, *model_);
  }

  Lexer lex_;
  const Model* model_;
};

const char* cmp_text(Cmp cmp) {
  switch (cmp) {
    case Cmp::Lt:
      return "<";
    case Cmp::Gt:
      return ">";
    case Cmp::Le:
      return "<=";
    case Cmp::Ge:
      return ">=";
  }
  return "?";
}

const char* req_op_text(ReqOp op) {
  switch (op) {
    case ReqOp::Eq:
      return "=";
    case ReqOp::Lt:
      return "<";
    case ReqOp::Gt:
      return ">";
    case ReqOp::Le:
      return "<=";
    case ReqOp::Ge:
      return ">=";
  }
  return "?";
}

std::string selector_text(const SelectorRef& sel) {
  if (sel.kind == SelectorRef::Kind::CategoryLabel) return "p_" + sel.label;
  return "diff(distr, seg, " + std::to_string(sel.index) + ")";
}

std::string operand_text(const Operand& op) {
  if (op.is_var) return op.var;
  return format_number(op.constant);
}

std::string operand_text_instantiated(const Operand& op, const Assignment& assignment) {
  if (!op.is_var) return format_number(op.constant);
  auto it = assignment.find(op.var);
  if (it == assignment.end()) {
    throw std::invalid_argument("assignment does not bind variable '" + op.var + "'");
  }
  return format_number(it->second);
}

std::string body_text(const std::vector<Conjunction>& disjuncts,
                      const Assignment* assignment) {
  std::string out;
  for (std::size_t d = 0; d < disjuncts.size(); ++d) {
    if (d) out += " or ";
    const bool parens = disjuncts.size() > 1 && disjuncts[d].size() > 1;
    if (parens) out += "(";
    for (std::size_t a = 0; a < disjuncts[d].size(); ++a) {
      if (a) out += " and ";
      const Atom& atom = disjuncts[d][a];
      out += selector_text(atom.sel);
      out += ' ';
      out += cmp_text(atom.cmp);
      out += ' ';
      out += assignment ? operand_text_instantiated(atom.rhs, *assignment)
                        : operand_text(atom.rhs);
    }
    if (parens) out += ")";
  }
  return out;
}

}  // namespace

RuleTemplate parse_template(const std::string& text, const Model* model) {
  return Parser(text, model).parse();
}

void resolve_actions(RuleTemplate& tmpl, const Model& model) {
  for (auto& rule : tmpl.action_rules) {
    rule.action = model.action_from_label(rule.action_label);
  }
}

std::string pretty_print(const RuleTemplate& tmpl) {
  std::string out;
  for (const auto& rule : tmpl.action_rules) {
    out += rule.rule_name + ": select " + rule.action_label + " when " +
           body_text(rule.disjuncts, nullptr) + ";\n";
  }
  if (!tmpl.requirements.empty()) {
    out += "where ";
    for (std::size_t i = 0; i < tmpl.requirements.size(); ++i) {
      if (i) out += " and ";
      const Requirement& req = tmpl.requirements[i];
      out += req.lhs;
      out += ' ';
      out += req_op_text(req.op);
      out += ' ';
      out += operand_text(req.rhs);
    }
    out += ";\n";
  }
  return out;
}

std::string print_instantiated(const RuleTemplate& tmpl, const Assignment& assignment) {
  std::string out;
  for (const auto& rule : tmpl.action_rules) {
    out += rule.rule_name + ": select " + rule.action_label + " when " +
           body_text(rule.disjuncts, &assignment) + ";\n";
  }
  return out;
}

double operand_value(const Operand& op, const Assignment& assignment) {
  if (!op.is_var) return op.constant;
  auto it = assignment.find(op.var);
  if (it == assignment.end()) {
    throw std::invalid_argument("assignment does not bind variable '" + op.var + "'");
  }
  return it->second;
}

bool compare(double lhs, Cmp cmp, double rhs) {
  switch (cmp) {
    case Cmp::Lt:
      return lhs < rhs;
    case Cmp::Gt:
      return lhs > rhs;
    case Cmp::Le:
      return lhs <= rhs;
    case Cmp::Ge:
      return lhs >= rhs;
  }
  return false;
}

double selector_value(const SelectorRef& sel, const ProbVector& probs,
                      const std::vector<std::string>& labels) {
  if (sel.kind == SelectorRef::Kind::CategoryIndex) {
    if (sel.index < 0 || sel.index >= static_cast<int>(probs.size())) {
      throw std::out_of_range("selector index " + std::to_string(sel.index) +
                              " outside the belief marginal");
    }
    return probs[static_cast<std::size_t>(sel.index)];
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == sel.label) {
      if (i >= probs.size()) break;
      return probs[i];
    }
  }
  throw std::invalid_argument("no category labeled '" + sel.label + "' in the belief marginal");
}

bool evaluate_conjunction(const Conjunction& conj, const Assignment& assignment,
                          const ProbVector& probs, const std::vector<std::string>& labels) {
  for (const Atom& atom : conj) {
    const double lhs = selector_value(atom.sel, probs, labels);
    const double rhs = operand_value(atom.rhs, assignment);
    if (!compare(lhs, atom.cmp, rhs)) return false;
  }
  return true;
}

bool evaluate_body(const std::vector<Conjunction>& disjuncts, const Assignment& assignment,
                   const ProbVector& probs, const std::vector<std::string>& labels) {
  for (const Conjunction& conj : disjuncts) {
    if (evaluate_conjunction(conj, assignment, probs, labels)) return true;
  }
  return false;
}

bool requirement_holds(const Requirement& req, const Assignment& assignment) {
  const double lhs = operand_value(Operand::variable(req.lhs), assignment);
  const double rhs = operand_value(req.rhs, assignment);
  switch (req.op) {
    case ReqOp::Eq:
      return lhs == rhs;
    case ReqOp::Lt:
      return lhs < rhs;
    case ReqOp::Gt:
      return lhs > rhs;
    case ReqOp::Le:
      return lhs <= rhs;
    case ReqOp::Ge:
      return lhs >= rhs;
  }
  return false;
}

bool requirements_hold(const RuleTemplate& tmpl, const Assignment& assignment) {
  for (const Requirement& req : tmpl.requirements) {
    if (!requirement_holds(req, assignment)) return false;
  }
  return true;
}

std::string format_number(double v) {
  char buf[2048];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  // The grammar has no exponent token; expand scientific notation into the
  // shortest positional form that still parses back exactly.
  if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) {
    for (int fp = 0; fp <= 1074; ++fp) {
      std::snprintf(buf, sizeof(buf), "%.*f", fp, v);
      if (std::strtod(buf, nullptr) == v) break;
    }
    s = buf;
    if (s.find('.') != std::string::npos) {
      while (s.back() == '0') s.pop_back();
      if (s.back() == '.') s.pop_back();
    }
  }
  return s;
}

}  // namespace pomcpshield
