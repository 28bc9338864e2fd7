#include "trl/parser.hpp"

#include <cctype>
#include <functional>

namespace trl {

namespace {

enum class Tok {
  Ident, Int, Str,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket, LAngle, RAngle,
  Comma, Semi, Pipe, Eq, Arrow, Star, Minus,
  End
};

struct Token {
  Tok kind;
  std::string text;
  int64_t num = 0;
  SourceSpan span;
};

class Lexer {
 public:
  Lexer(const std::string& text, std::string file)
      : text_(text), file_(std::move(file)) {
    next();
  }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void next() {
    skip_ws();
    tok_.span = {file_, line_, col_, line_, col_};
    if (pos_ >= text_.size()) {
      tok_.kind = Tok::End;
      tok_.text = "<eof>";
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        advance();
      tok_.kind = Tok::Ident;
      tok_.text = text_.substr(start, pos_ - start);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number(false);
    } else if (c == '"') {
      advance();
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) advance();
        s += text_[pos_];
        advance();
      }
      if (pos_ >= text_.size()) throw StaticError("unterminated string", tok_.span);
      advance();
      tok_.kind = Tok::Str;
      tok_.text = s;
    } else {
      advance();
      switch (c) {
        case '(': tok_.kind = Tok::LParen; break;
        case ')': tok_.kind = Tok::RParen; break;
        case '{': tok_.kind = Tok::LBrace; break;
        case '}': tok_.kind = Tok::RBrace; break;
        case '[': tok_.kind = Tok::LBracket; break;
        case ']': tok_.kind = Tok::RBracket; break;
        case '<': tok_.kind = Tok::LAngle; break;
        case '>': tok_.kind = Tok::RAngle; break;
        case ',': tok_.kind = Tok::Comma; break;
        case ';': tok_.kind = Tok::Semi; break;
        case '|': tok_.kind = Tok::Pipe; break;
        case '*': tok_.kind = Tok::Star; break;
        case '-':
          if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            lex_number(true);
            return;
          }
          tok_.kind = Tok::Minus;
          break;
        case '=':
          if (pos_ < text_.size() && text_[pos_] == '>') {
            advance();
            tok_.kind = Tok::Arrow;
          } else {
            tok_.kind = Tok::Eq;
          }
          break;
        default:
          throw StaticError(std::string("unexpected character '") + c + "'", tok_.span);
      }
      tok_.text = c;
    }
    tok_.span.end_line = line_;
    tok_.span.end_col = col_;
  }

  void lex_number(bool negative) {
    size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      advance();
    tok_.kind = Tok::Int;
    tok_.text = text_.substr(start, pos_ - start);
    tok_.num = std::stoll(tok_.text);
    if (negative) tok_.num = -tok_.num;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  Parser(const std::string& text, const std::string& file) : lex_(text, file) {}

  Program program() {
    Program p;
    while (!at(Tok::End)) {
      if (at_ident("data")) {
        p.datadecls.push_back(data_decl());
      } else if (at_ident("fun")) {
        p.functions.push_back(fun_decl());
      } else {
        GlobalDecl g;
        g.span = lex_.peek().span;
        g.type = type();
        g.name = ident("global name");
        expect(Tok::Semi);
        p.globals.push_back(g);
      }
    }
    return p;
  }

  std::vector<RefinementDecl> refinements() {
    std::vector<RefinementDecl> out;
    while (!at(Tok::End)) out.push_back(refinement_decl());
    return out;
  }

  ShapeTerm shape_term_all() {
    ShapeTerm t = shape_term();
    expect(Tok::End);
    return t;
  }

 private:
  bool at(Tok k) const { return lex_.peek().kind == k; }
  bool at_ident(const std::string& s) const {
    return at(Tok::Ident) && lex_.peek().text == s;
  }

  Token expect(Tok k, const std::string& what = "") {
    if (!at(k))
      throw StaticError("expected " + (what.empty() ? token_name(k) : what) +
                            ", found '" + lex_.peek().text + "'",
                        lex_.peek().span);
    return lex_.take();
  }

  static std::string token_name(Tok k) {
    switch (k) {
      case Tok::Ident: return "identifier";
      case Tok::Int: return "integer";
      case Tok::Str: return "string";
      case Tok::LParen: return "'('";
      case Tok::RParen: return "')'";
      case Tok::LBrace: return "'{'";
      case Tok::RBrace: return "'}'";
      case Tok::LBracket: return "'['";
      case Tok::RBracket: return "']'";
      case Tok::LAngle: return "'<'";
      case Tok::RAngle: return "'>'";
      case Tok::Comma: return "','";
      case Tok::Semi: return "';'";
      case Tok::Pipe: return "'|'";
      case Tok::Eq: return "'='";
      case Tok::Arrow: return "'=>'";
      case Tok::Star: return "'*'";
      case Tok::Minus: return "'-'";
      case Tok::End: return "end of input";
    }
    return "?";
  }

  std::string ident(const std::string& what) {
    return expect(Tok::Ident, what).text;
  }

  void expect_keyword(const std::string& kw) {
    if (!at_ident(kw))
      throw StaticError("expected '" + kw + "', found '" + lex_.peek().text + "'",
                        lex_.peek().span);
    lex_.take();
  }

  TypeExpr type() {
    Token t = expect(Tok::Ident, "type");
    if (t.text == "void") return TypeExpr::void_type();
    if (t.text == "value") return TypeExpr::value_type();
    if (t.text == "int") return TypeExpr::int_type();
    if (t.text == "str") return TypeExpr::str_type();
    if (t.text == "set") {
      expect(Tok::LAngle);
      TypeExpr e = type();
      expect(Tok::RAngle);
      return TypeExpr::set_type(e);
    }
    return TypeExpr::adt(t.text);
  }

  DataDecl data_decl() {
    DataDecl d;
    d.span = lex_.peek().span;
    expect_keyword("data");
    d.name = ident("data type name");
    expect(Tok::Eq);
    d.constructors.push_back(ctor_decl());
    while (at(Tok::Pipe)) {
      lex_.take();
      d.constructors.push_back(ctor_decl());
    }
    expect(Tok::Semi);
    return d;
  }

  ConstructorDecl ctor_decl() {
    ConstructorDecl c;
    c.span = lex_.peek().span;
    c.name = ident("constructor name");
    expect(Tok::LParen);
    if (!at(Tok::RParen)) {
      for (;;) {
        Param p;
        p.type = type();
        p.name = ident("parameter name");
        c.params.push_back(p);
        if (!at(Tok::Comma)) break;
        lex_.take();
      }
    }
    expect(Tok::RParen);
    return c;
  }

  FunDecl fun_decl() {
    FunDecl f;
    f.span = lex_.peek().span;
    expect_keyword("fun");
    f.ret = type();
    f.name = ident("function name");
    expect(Tok::LParen);
    if (!at(Tok::RParen)) {
      for (;;) {
        Param p;
        p.type = type();
        p.name = ident("parameter name");
        f.params.push_back(p);
        if (!at(Tok::Comma)) break;
        lex_.take();
      }
    }
    expect(Tok::RParen);
    expect(Tok::Eq);
    f.body = expr();
    expect(Tok::Semi);
    return f;
  }

  // Sequencing is only available inside parentheses and solve bodies.
  Expr expr_seq() {
    Expr e = expr();
    while (at(Tok::Semi)) {
      lex_.take();
      Expr rhs = expr();
      SourceSpan sp = e.span;
      e = Expr::seq(std::move(e), std::move(rhs));
      e.span = sp;
    }
    return e;
  }

  Expr expr() {
    SourceSpan sp = lex_.peek().span;
    if (at_ident("fail")) {
      lex_.take();
      Expr e = Expr::fail();
      e.span = sp;
      return e;
    }
    if (at_ident("bottom")) return visit_expr();
    if (at_ident("solve")) return solve_expr();
    if (at(Tok::LParen)) {
      lex_.take();
      Expr e = expr_seq();
      expect(Tok::RParen);
      return e;
    }
    if (at(Tok::LBrace)) {
      lex_.take();
      std::vector<Expr> elems;
      if (!at(Tok::RBrace)) {
        for (;;) {
          elems.push_back(expr());
          if (!at(Tok::Comma)) break;
          lex_.take();
        }
      }
      expect(Tok::RBrace);
      Expr e = Expr::set(std::move(elems));
      e.span = sp;
      return e;
    }
    std::string name = ident("expression");
    if (at(Tok::LParen)) {
      lex_.take();
      std::vector<Expr> args;
      if (!at(Tok::RParen)) {
        for (;;) {
          args.push_back(expr());
          if (!at(Tok::Comma)) break;
          lex_.take();
        }
      }
      expect(Tok::RParen);
      Expr e = Expr::cons(name, std::move(args));  // resolved to Call later
      e.span = sp;
      return e;
    }
    if (at(Tok::Eq)) {
      lex_.take();
      Expr rhs = expr();
      Expr e = Expr::assign(name, std::move(rhs));
      e.span = sp;
      return e;
    }
    Expr e = Expr::var(name);
    e.span = sp;
    return e;
  }

  Expr visit_expr() {
    SourceSpan sp = lex_.peek().span;
    expect_keyword("bottom");
    expect(Tok::Minus);
    expect_keyword("up");
    expect_keyword("visit");
    expect(Tok::LParen);
    Expr subject = expr_seq();
    expect(Tok::RParen);
    expect(Tok::LBrace);
    std::vector<Case> cases;
    while (at_ident("case")) {
      Case c;
      c.span = lex_.peek().span;
      lex_.take();
      c.pat = pattern();
      expect(Tok::Arrow);
      c.body = expr();
      cases.push_back(std::move(c));
    }
    expect(Tok::RBrace);
    Expr e = Expr::visit(std::move(subject), std::move(cases));
    e.span = sp;
    return e;
  }

  Expr solve_expr() {
    SourceSpan sp = lex_.peek().span;
    expect_keyword("solve");
    expect(Tok::LParen);
    std::vector<std::string> vars;
    for (;;) {
      vars.push_back(ident("watched variable"));
      if (!at(Tok::Comma)) break;
      lex_.take();
    }
    expect(Tok::RParen);
    expect(Tok::LBrace);
    Expr body = expr_seq();
    expect(Tok::RBrace);
    Expr e = Expr::solve(std::move(vars), std::move(body));
    e.span = sp;
    return e;
  }

  Pattern pattern() {
    SourceSpan sp = lex_.peek().span;
    if (at(Tok::LBrace)) {
      lex_.take();
      std::vector<Pattern> elems;
      std::vector<bool> stars;
      if (!at(Tok::RBrace)) {
        for (;;) {
          if (at(Tok::Star)) {
            lex_.take();
            elems.push_back(Pattern::var(ident("star variable")));
            stars.push_back(true);
          } else {
            elems.push_back(pattern());
            stars.push_back(false);
          }
          if (!at(Tok::Comma)) break;
          lex_.take();
        }
      }
      expect(Tok::RBrace);
      Pattern p = Pattern::set(std::move(elems), std::move(stars));
      p.span = sp;
      return p;
    }
    std::string name = ident("pattern");
    if (at(Tok::LParen)) {
      lex_.take();
      std::vector<Pattern> args;
      if (!at(Tok::RParen)) {
        for (;;) {
          args.push_back(pattern());
          if (!at(Tok::Comma)) break;
          lex_.take();
        }
      }
      expect(Tok::RParen);
      Pattern p = Pattern::cons(name, std::move(args));
      p.span = sp;
      return p;
    }
    Pattern p = Pattern::var(name);
    p.span = sp;
    return p;
  }

  RefinementDecl refinement_decl() {
    RefinementDecl r;
    r.span = lex_.peek().span;
    expect_keyword("refine");
    r.name = ident("refinement name");
    expect_keyword("of");
    r.base = ident("base data type");
    expect(Tok::Eq);
    r.alternatives.push_back(alternative());
    while (at(Tok::Pipe)) {
      lex_.take();
      r.alternatives.push_back(alternative());
    }
    expect(Tok::Semi);
    return r;
  }

  std::pair<std::string, std::vector<ShapeTerm>> alternative() {
    std::string ctor = ident("constructor");
    std::vector<ShapeTerm> args;
    expect(Tok::LParen);
    if (!at(Tok::RParen)) {
      for (;;) {
        args.push_back(shape_term());
        if (!at(Tok::Comma)) break;
        lex_.take();
      }
    }
    expect(Tok::RParen);
    return {ctor, args};
  }

  int64_t interval_bound() {
    if (at(Tok::Int)) return lex_.take().num;
    if (at(Tok::Minus)) {
      lex_.take();
      if (at_ident("inf")) {
        lex_.take();
        return Ext::kNegInf;
      }
      throw StaticError("expected 'inf' after '-'", lex_.peek().span);
    }
    if (at_ident("inf")) {
      lex_.take();
      return Ext::kPosInf;
    }
    throw StaticError("expected interval bound", lex_.peek().span);
  }

  Interval interval_literal() {
    expect(Tok::LBracket);
    int64_t lo = interval_bound();
    expect(Tok::Semi);
    int64_t hi = interval_bound();
    expect(Tok::RBracket);
    Interval iv(lo, hi);
    if (iv.is_empty()) throw StaticError("empty interval literal", lex_.peek().span);
    return iv;
  }

  ShapeTerm shape_term() {
    ShapeTerm t;
    t.span = lex_.peek().span;
    if (at(Tok::LBrace)) {
      lex_.take();
      t.kind = ShapeTerm::Kind::SetT;
      t.sub.push_back(shape_term());
      expect(Tok::RBrace);
      t.interval = interval_literal().clamp_card();
      return t;
    }
    std::string name = ident("shape term");
    if (name == "int") {
      t.kind = ShapeTerm::Kind::IntT;
      t.interval = Interval::full();
      if (at(Tok::LBracket)) {
        t.interval = interval_literal();
        t.has_interval = true;
      }
      return t;
    }
    if (name == "str") {
      t.kind = ShapeTerm::Kind::StrT;
      if (at(Tok::LBrace)) {
        lex_.take();
        for (;;) {
          t.strings.push_back(expect(Tok::Str, "string constant").text);
          if (!at(Tok::Comma)) break;
          lex_.take();
        }
        expect(Tok::RBrace);
      }
      return t;
    }
    if (name == "value") {
      t.kind = ShapeTerm::Kind::Value;
      return t;
    }
    if (name == "void") {
      t.kind = ShapeTerm::Kind::Void;
      return t;
    }
    if (at(Tok::LParen)) {
      lex_.take();
      t.kind = ShapeTerm::Kind::ConsT;
      t.name = name;
      if (!at(Tok::RParen)) {
        for (;;) {
          t.sub.push_back(shape_term());
          if (!at(Tok::Comma)) break;
          lex_.take();
        }
      }
      expect(Tok::RParen);
      return t;
    }
    t.kind = ShapeTerm::Kind::Name;
    t.name = name;
    return t;
  }

  Lexer lex_;
};

// Constructor-vs-call resolution after all declarations are known.
void resolve_calls(Expr& e, const Program& p) {
  if (e.kind == ExprKind::Cons && !p.find_ctor(e.name) && p.find_fun(e.name))
    e.kind = ExprKind::Call;
  for (Expr& a : e.args) resolve_calls(a, p);
  for (Case& c : e.cases) resolve_calls(c.body, p);
}

void validate_shape_term(const ShapeTerm& t, const Program& program,
                         const std::set<std::string>& nonterminals) {
  switch (t.kind) {
    case ShapeTerm::Kind::IntT:
    case ShapeTerm::Kind::StrT:
    case ShapeTerm::Kind::Value:
    case ShapeTerm::Kind::Void:
      return;
    case ShapeTerm::Kind::SetT:
      validate_shape_term(t.sub[0], program, nonterminals);
      return;
    case ShapeTerm::Kind::Name:
      if (!nonterminals.count(t.name) && !program.find_data(t.name))
        throw StaticError("undeclared nonterminal or data type '" + t.name + "'",
                          t.span);
      return;
    case ShapeTerm::Kind::ConsT: {
      const ConstructorDecl* c = program.find_ctor(t.name);
      if (!c) throw StaticError("unknown constructor '" + t.name + "'", t.span);
      if (c->params.size() != t.sub.size())
        throw StaticError("constructor '" + t.name + "' expects " +
                              std::to_string(c->params.size()) + " arguments, got " +
                              std::to_string(t.sub.size()),
                          t.span);
      for (const ShapeTerm& s : t.sub) validate_shape_term(s, program, nonterminals);
      return;
    }
  }
}

}  // namespace

Program parse_program(const std::string& text, const std::string& filename) {
  Parser parser(text, filename);
  Program p = parser.program();
  for (FunDecl& f : p.functions) resolve_calls(f.body, p);
  check_program(p);
  return p;
}

std::vector<RefinementDecl> parse_refinement(const std::string& text,
                                             const Program& program,
                                             const std::string& filename) {
  Parser parser(text, filename);
  std::vector<RefinementDecl> decls = parser.refinements();
  std::set<std::string> nts;
  for (const RefinementDecl& d : decls) {
    if (program.find_data(d.name))
      throw StaticError("refinement name '" + d.name + "' collides with a data type",
                        d.span);
    if (!nts.insert(d.name).second)
      throw StaticError("duplicate refinement '" + d.name + "'", d.span);
  }
  for (const RefinementDecl& d : decls) {
    const DataDecl* base = program.find_data(d.base);
    if (!base) throw StaticError("unknown data type '" + d.base + "'", d.span);
    for (const auto& [ctor, args] : d.alternatives) {
      const DataDecl* owner = nullptr;
      const ConstructorDecl* c = program.find_ctor(ctor, &owner);
      if (!c || owner != base)
        throw StaticError("'" + ctor + "' is not a constructor of " + d.base, d.span);
      if (c->params.size() != args.size())
        throw StaticError("constructor '" + ctor + "' expects " +
                              std::to_string(c->params.size()) + " arguments, got " +
                              std::to_string(args.size()),
                          d.span);
      for (const ShapeTerm& t : args) validate_shape_term(t, program, nts);
    }
  }
  return decls;
}

ShapeTerm parse_shape_term(const std::string& text, const Program& program,
                           const std::set<std::string>& nonterminals) {
  Parser parser(text, "<shape>");
  ShapeTerm t = parser.shape_term_all();
  validate_shape_term(t, program, nonterminals);
  return t;
}

}  // namespace trl
