#include "certify/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

namespace certify {

namespace {

struct Token {
    enum class Kind { ident, number, punct, end };
    Kind kind = Kind::end;
    std::string text;
    double num = 0.0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, tok_.line, tok_.col);
    }

private:
    void advance() {
        skip_ws();
        tok_ = Token{};
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src_.size()) {
            tok_.kind = Token::Kind::end;
            tok_.text = "<end>";
            return;
        }
        const char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                bump();
            tok_.kind = Token::Kind::ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '.'))
                bump();
            if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                std::size_t save = pos_;
                bump();
                if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
                if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    while (pos_ < src_.size() &&
                           std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        bump();
                } else {
                    pos_ = save; // 'e' belonged to something else
                }
            }
            tok_.kind = Token::Kind::number;
            tok_.text = src_.substr(start, pos_ - start);
            tok_.num = std::strtod(tok_.text.c_str(), nullptr);
            return;
        }
        // multi-char punctuation
        if (c == '<' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
            tok_.kind = Token::Kind::punct;
            tok_.text = "<=";
            bump();
            bump();
            return;
        }
        tok_.kind = Token::Kind::punct;
        tok_.text = std::string(1, c);
        bump();
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') bump();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    SystemModel parse() {
        expect_ident("states");
        model_.state_names = namelist();
        expect_punct(";");
        expect_ident("inputs");
        model_.input_names = namelist();
        expect_punct(";");
        model_.n = model_.state_names.size();
        model_.m = model_.input_names.size();
        for (std::size_t i = 0; i < model_.n + model_.m; ++i) {
            const auto& nm = i < model_.n ? model_.state_names[i]
                                          : model_.input_names[i - model_.n];
            if (var_index_.count(nm)) lex_.fail("duplicate variable name '" + nm + "'");
            var_index_[nm] = i;
        }
        model_.f.resize(model_.n);
        model_.region.box.assign(model_.n + model_.m, Interval(-1.0, 1.0));
        model_.region.declared.assign(model_.n + model_.m, false);

        std::vector<bool> have_eq(model_.n, false);
        std::map<std::size_t, Expr> outputs;

        while (lex_.peek().kind != Token::Kind::end) {
            const Token t = lex_.peek();
            if (t.kind != Token::Kind::ident) lex_.fail("expected a statement");
            if (t.text == "region") {
                parse_region();
            } else if (t.text == "option") {
                parse_option();
            } else if (is_output_name(t.text)) {
                lex_.take();
                const std::size_t idx = std::stoul(t.text.substr(1));
                expect_punct("=");
                Expr e = parse_expr();
                expect_punct(";");
                if (idx == 0) throw ParseError("output indices start at 1", t.line, t.col);
                if (outputs.count(idx - 1))
                    throw ParseError("duplicate output y" + std::to_string(idx), t.line, t.col);
                outputs.emplace(idx - 1, e);
            } else {
                // state equation:  name ' = expr ;
                lex_.take();
                auto it = var_index_.find(t.text);
                if (it == var_index_.end() || it->second >= model_.n)
                    throw ParseError("equation for undeclared state '" + t.text + "'", t.line,
                                     t.col);
                expect_punct("'");
                expect_punct("=");
                Expr e = parse_expr();
                expect_punct(";");
                if (have_eq[it->second])
                    throw ParseError("duplicate equation for '" + t.text + "'", t.line, t.col);
                model_.f[it->second] = e;
                have_eq[it->second] = true;
            }
        }

        for (std::size_t i = 0; i < model_.n; ++i)
            if (!have_eq[i])
                throw ParseError("missing equation for state '" + model_.state_names[i] + "'", 1,
                                 1);
        model_.p = outputs.size();
        for (std::size_t j = 0; j < model_.p; ++j) {
            auto it = outputs.find(j);
            if (it == outputs.end())
                throw ParseError("output indices must be contiguous from y1", 1, 1);
            model_.h.push_back(it->second);
        }

        check_equilibrium();
        check_region();
        model_.options = options_;
        return model_;
    }

private:
    static bool is_output_name(const std::string& s) {
        if (s.size() < 2 || s[0] != 'y') return false;
        for (std::size_t i = 1; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return true;
    }

    std::vector<std::string> namelist() {
        std::vector<std::string> names;
        while (lex_.peek().kind == Token::Kind::ident) {
            names.push_back(lex_.take().text);
            if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == ",")
                lex_.take();
            else
                break;
        }
        return names;
    }

    void parse_region() {
        lex_.take(); // region
        const Token t = lex_.peek();
        if (t.kind == Token::Kind::ident && t.text == "ineq") {
            lex_.take();
            Expr e = parse_expr();
            expect_punct("<=");
            const Token z = lex_.take();
            if (z.kind != Token::Kind::number || z.num != 0.0)
                throw ParseError("region inequality must end with '<= 0'", z.line, z.col);
            expect_punct(";");
            auto poly = e.to_polynomial(all_var_names());
            if (!poly)
                throw ParseError("region inequality must be polynomial", t.line, t.col);
            model_.region.extra_ineqs.push_back(*poly);
            return;
        }
        if (t.kind != Token::Kind::ident) lex_.fail("expected variable name in region");
        lex_.take();
        auto it = var_index_.find(t.text);
        if (it == var_index_.end())
            throw ParseError("region for undeclared variable '" + t.text + "'", t.line, t.col);
        expect_ident("in");
        expect_punct("[");
        const double lo = signed_number();
        expect_punct(",");
        const double hi = signed_number();
        expect_punct("]");
        expect_punct(";");
        if (!(lo < hi))
            throw ParseError("empty interval for '" + t.text + "'", t.line, t.col);
        model_.region.box[it->second] = Interval(lo, hi);
        model_.region.declared[it->second] = true;
    }

    void parse_option() {
        lex_.take(); // option
        const Token key = lex_.take();
        if (key.kind != Token::Kind::ident) lex_.fail("expected option name");
        expect_punct("=");
        std::string value;
        while (!(lex_.peek().kind == Token::Kind::punct && lex_.peek().text == ";")) {
            if (lex_.peek().kind == Token::Kind::end) lex_.fail("unterminated option");
            value += lex_.take().text;
        }
        expect_punct(";");
        options_.emplace_back(key.text, value);
    }

    double signed_number() {
        double sign = 1.0;
        while (lex_.peek().kind == Token::Kind::punct &&
               (lex_.peek().text == "-" || lex_.peek().text == "+")) {
            if (lex_.take().text == "-") sign = -sign;
        }
        const Token t = lex_.take();
        if (t.kind != Token::Kind::number)
            throw ParseError("expected a number", t.line, t.col);
        return sign * t.num;
    }

    // expression grammar: + - over * / over unary- over ^ over atoms
    Expr parse_expr() {
        Expr e = parse_term();
        while (lex_.peek().kind == Token::Kind::punct &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            const std::string op = lex_.take().text;
            Expr rhs = parse_term();
            e = Expr::binary(op == "+" ? BinaryOp::add : BinaryOp::sub, e, rhs);
        }
        return e;
    }

    Expr parse_term() {
        Expr e = parse_factor();
        while (lex_.peek().kind == Token::Kind::punct &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            const std::string op = lex_.take().text;
            Expr rhs = parse_factor();
            e = Expr::binary(op == "*" ? BinaryOp::mul : BinaryOp::div, e, rhs);
        }
        return e;
    }

    Expr parse_factor() {
        if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == "-") {
            lex_.take();
            return Expr::unary(UnaryOp::neg, parse_factor());
        }
        if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == "+") {
            lex_.take();
            return parse_factor();
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (lex_.peek().kind == Token::Kind::punct && lex_.peek().text == "^") {
            lex_.take();
            const Token t = lex_.take();
            if (t.kind != Token::Kind::number || t.num != std::floor(t.num) || t.num < 0)
                throw ParseError("exponent must be a nonnegative integer", t.line, t.col);
            return Expr::pow(base, static_cast<int>(t.num));
        }
        return base;
    }

    Expr parse_atom() {
        const Token t = lex_.take();
        if (t.kind == Token::Kind::number) return Expr::constant(t.num);
        if (t.kind == Token::Kind::ident) {
            static const std::map<std::string, UnaryOp> funcs = {
                {"sin", UnaryOp::sin},   {"cos", UnaryOp::cos}, {"exp", UnaryOp::exp},
                {"log", UnaryOp::log},   {"sqrt", UnaryOp::sqrt}, {"tanh", UnaryOp::tanh}};
            auto fit = funcs.find(t.text);
            if (fit != funcs.end()) {
                expect_punct("(");
                Expr arg = parse_expr();
                expect_punct(")");
                return Expr::unary(fit->second, arg);
            }
            auto it = var_index_.find(t.text);
            if (it == var_index_.end())
                throw ParseError("undeclared variable '" + t.text + "'", t.line, t.col);
            return Expr::variable(it->second);
        }
        if (t.kind == Token::Kind::punct && t.text == "(") {
            Expr e = parse_expr();
            expect_punct(")");
            return e;
        }
        throw ParseError("unexpected token '" + t.text + "'", t.line, t.col);
    }

    std::vector<std::string> all_var_names() const {
        std::vector<std::string> v = model_.state_names;
        v.insert(v.end(), model_.input_names.begin(), model_.input_names.end());
        return v;
    }

    void check_equilibrium() const {
        const std::vector<double> origin(model_.n + model_.m, 0.0);
        for (std::size_t i = 0; i < model_.n; ++i) {
            const double v = model_.f[i].eval(origin);
            if (std::fabs(v) > 1e-9)
                throw ParseError("origin is not an equilibrium: f_" + std::to_string(i + 1) +
                                     "(0,0) = " + std::to_string(v),
                                 1, 1);
        }
        for (std::size_t j = 0; j < model_.p; ++j) {
            const double v = model_.h[j].eval(origin);
            if (std::fabs(v) > 1e-9)
                throw ParseError("origin is not an equilibrium: h_" + std::to_string(j + 1) +
                                     "(0,0) = " + std::to_string(v),
                                 1, 1);
        }
    }

    void check_region() const {
        for (std::size_t i = 0; i < model_.region.box.size(); ++i) {
            if (!model_.region.declared[i]) continue;
            const auto& iv = model_.region.box[i];
            if (!(iv.lo < 0.0 && 0.0 < iv.hi))
                throw ParseError("region box must contain the origin in its interior", 1, 1);
        }
        const std::vector<double> origin(model_.n + model_.m, 0.0);
        for (const auto& g : model_.region.extra_ineqs) {
            if (g.eval(origin) > 1e-9)
                throw ParseError("region inequality violated at the origin", 1, 1);
        }
    }

    void expect_ident(const std::string& s) {
        const Token t = lex_.take();
        if (t.kind != Token::Kind::ident || t.text != s)
            throw ParseError("expected '" + s + "', got '" + t.text + "'", t.line, t.col);
    }

    void expect_punct(const std::string& s) {
        const Token t = lex_.take();
        if (t.kind != Token::Kind::punct || t.text != s)
            throw ParseError("expected '" + s + "', got '" + t.text + "'", t.line, t.col);
    }

    Lexer lex_;
    SystemModel model_;
    std::map<std::string, std::size_t> var_index_;
    std::vector<std::pair<std::string, std::string>> options_;
};

std::string poly_to_dsl(const Polynomial& p) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [mi, c] = *it;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", first ? c : std::fabs(c));
        if (!first) out += (c < 0 ? " - " : " + ");
        out += buf;
        for (std::size_t v = 0; v < p.vars().size(); ++v) {
            if (mi[v] == 0) continue;
            out += "*" + p.vars()[v];
            if (mi[v] > 1) out += "^" + std::to_string(mi[v]);
        }
        first = false;
    }
    return out;
}

} // namespace

SystemModel parse_system(const std::string& text) { return Parser(text).parse(); }

std::string print_system(const SystemModel& model) {
    std::string out = "states ";
    for (std::size_t i = 0; i < model.n; ++i)
        out += (i ? ", " : "") + model.state_names[i];
    out += ";\ninputs";
    for (std::size_t j = 0; j < model.m; ++j)
        out += (j ? ", " : " ") + model.input_names[j];
    out += ";\n";
    const auto names = model.all_vars();
    for (std::size_t i = 0; i < model.n; ++i)
        out += model.state_names[i] + "' = " + model.f[i].str(names) + ";\n";
    for (std::size_t j = 0; j < model.p; ++j)
        out += "y" + std::to_string(j + 1) + " = " + model.h[j].str(names) + ";\n";
    for (std::size_t i = 0; i < model.region.box.size(); ++i) {
        if (!model.region.declared[i]) continue;
        char buf[96];
        std::snprintf(buf, sizeof buf, "region %s in [%.17g, %.17g];\n", names[i].c_str(),
                      model.region.box[i].lo, model.region.box[i].hi);
        out += buf;
    }
    for (const auto& g : model.region.extra_ineqs)
        out += "region ineq " + poly_to_dsl(g) + " <= 0;\n";
    return out;
}

} // namespace certify
