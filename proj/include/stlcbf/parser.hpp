#pragma once

// Concrete syntax for the supported STL fragment.
//
//   formula  := until ('&' until)*
//   until    := unary ('U' interval unary)?
//   unary    := '!' unary | 'G' interval '(' formula ')' | 'F' interval '(' formula ')'
//             | 'true' | atom | '(' formula ')'
//   interval := '[' number ',' number ']'
//   atom     := expr ('>=' | '>' | '<=' | '<') expr
//             | 'norm_inf' '(' expr ')' ('<=' | '<') expr
//             | 'ball2' '(' expr ',' expr ')'
//   expr     := ['-'] term (('+' | '-') term)*
//   term     := factor ('*' factor)*
//   factor   := number | '[' number (',' number)* ']' | 'x'<k> ['[' <c> ']']
//             | 'dot' '(' expr ',' expr ')' | '(' expr ')' | '-' factor
//
// Expressions are affine in the stacked team state. `xk` is the state block
// of agent k (1-based), `xk[c]` its c-th component (1-based). `norm_inf(e) <= r`
// expands to 2*dim(e) affine literals and `ball2(e, r)` is r^2 - |e|^2 >= 0.

#include "stlcbf/error.hpp"
#include "stlcbf/formula.hpp"
#include "stlcbf/layout.hpp"
#include "stlcbf/predicate.hpp"

#include <Eigen/Dense>

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stlcbf {

namespace detail {

enum class Tok { number, ident, lbracket, rbracket, lparen, rparen, comma, amp, bang, plus, minus, star, ge, gt, le, lt, end };

struct Token {
    Tok kind;
    std::string_view text;
    std::size_t pos;
    double number = 0.0;
};

inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
            }
            Token t{Tok::number, s.substr(start, i - start), start};
            const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
            if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
                throw ParseError("malformed number '" + std::string(t.text) + "'", start);
            out.push_back(t);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
            out.push_back({Tok::ident, s.substr(start, i - start), start});
            continue;
        }
        auto two = [&](char next) { return i + 1 < s.size() && s[i + 1] == next; };
        Tok k;
        std::size_t len = 1;
        switch (c) {
            case '[': k = Tok::lbracket; break;
            case ']': k = Tok::rbracket; break;
            case '(': k = Tok::lparen; break;
            case ')': k = Tok::rparen; break;
            case ',': k = Tok::comma; break;
            case '&': k = Tok::amp; if (two('&')) len = 2; break;
            case '!': k = Tok::bang; break;
            case '+': k = Tok::plus; break;
            case '-': k = Tok::minus; break;
            case '*': k = Tok::star; break;
            case '>': k = two('=') ? (len = 2, Tok::ge) : Tok::gt; break;
            case '<': k = two('=') ? (len = 2, Tok::le) : Tok::lt; break;
            default: throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
        i += len;
        out.push_back({k, s.substr(start, len), start});
    }
    out.push_back({Tok::end, {}, s.size()});
    return out;
}

/// Affine map x -> A x + b of the stacked state (rows = value dimension).
struct AffineExpr {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    Eigen::Index rows() const { return b.size(); }
    bool is_constant() const { return A.isZero(0.0); }
};

class Parser {
public:
    Parser(std::string_view text, const StateLayout& layout) : toks_(tokenize(text)), layout_(layout) {}

    Formula parse() {
        Formula f = parse_conj();
        if (peek().kind != Tok::end) fail("unexpected '" + std::string(peek().text) + "'");
        return f;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool accept(Tok k) {
        if (peek().kind != k) return false;
        ++pos_;
        return true;
    }
    bool at_ident(std::string_view name, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::ident && peek(ahead).text == name;
    }
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, peek().pos); }
    void expect(Tok k, const char* what) {
        if (!accept(k)) fail(std::string("expected ") + what);
    }

    Formula parse_conj() {
        std::vector<Formula> parts;
        parts.push_back(parse_until());
        while (accept(Tok::amp)) parts.push_back(parse_until());
        return Formula::conjunction(std::move(parts));
    }

    Formula parse_until() {
        Formula lhs = parse_unary();
        if (at_ident("U") && peek(1).kind == Tok::lbracket) {
            ++pos_;
            const Interval iv = parse_interval();
            Formula rhs = parse_unary();
            return Formula::until(iv, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Formula parse_unary() {
        if (accept(Tok::bang)) {
            const std::size_t at = peek().pos;
            Formula inner = parse_unary();
            if (inner.kind() != NodeKind::literal)
                throw SemanticError("negation is only allowed on a single predicate (at " + std::to_string(at) + ")");
            return Formula::literal(inner.predicate().negated());
        }
        if ((at_ident("G") || at_ident("F")) && peek(1).kind == Tok::lbracket) {
            const bool always = take().text == "G";
            const Interval iv = parse_interval();
            expect(Tok::lparen, "'('");
            Formula body = parse_conj();
            expect(Tok::rparen, "')'");
            return always ? Formula::always(iv, std::move(body)) : Formula::eventually(iv, std::move(body));
        }
        if (at_ident("true")) {
            ++pos_;
            return Formula::top();
        }
        // An atom may itself start with '(' so try it first and fall back to
        // a parenthesized formula, reporting whichever error got further.
        const std::size_t save = pos_;
        try {
            return parse_atom();
        } catch (const ParseError& atom_error) {
            const std::size_t atom_pos = atom_error.position();
            pos_ = save;
            if (peek().kind != Tok::lparen) throw;
            try {
                ++pos_;
                Formula f = parse_conj();
                expect(Tok::rparen, "')'");
                return f;
            } catch (const ParseError& group_error) {
                if (group_error.position() >= atom_pos) throw;
                throw atom_error;
            }
        }
    }

    Interval parse_interval() {
        expect(Tok::lbracket, "'['");
        const double a = parse_number();
        expect(Tok::comma, "','");
        const double b = parse_number();
        expect(Tok::rbracket, "']'");
        Interval iv{a, b};
        check_interval(iv);
        return iv;
    }

    double parse_number() {
        if (peek().kind != Tok::number) fail("expected number");
        return take().number;
    }

    Formula parse_atom() {
        if (at_ident("norm_inf") && peek(1).kind == Tok::lparen) {
            pos_ += 2;
            AffineExpr e = parse_expr();
            expect(Tok::rparen, "')'");
            if (!accept(Tok::le) && !accept(Tok::lt)) fail("expected '<=' after norm_inf(...)");
            const double r = constant_scalar(parse_expr(), "norm_inf radius");
            std::vector<Formula> lits;
            for (Eigen::Index i = 0; i < e.rows(); ++i) {
                lits.push_back(Formula::literal(Predicate::affine(-e.A.row(i).transpose(), r - e.b(i))));
                lits.push_back(Formula::literal(Predicate::affine(e.A.row(i).transpose(), r + e.b(i))));
            }
            return Formula::conjunction(std::move(lits));
        }
        if (at_ident("ball2") && peek(1).kind == Tok::lparen) {
            pos_ += 2;
            AffineExpr e = parse_expr();
            expect(Tok::comma, "','");
            const double r = constant_scalar(parse_expr(), "ball2 radius");
            expect(Tok::rparen, "')'");
            if (r < 0.0) throw SemanticError("ball2 radius must be non-negative");
            return Formula::literal(Predicate::quad_ball(e.A, e.b, r * r));
        }
        AffineExpr lhs = parse_expr();
        const Tok op = peek().kind;
        if (op != Tok::ge && op != Tok::gt && op != Tok::le && op != Tok::lt) fail("expected comparison operator");
        ++pos_;
        AffineExpr rhs = parse_expr();
        if (lhs.rows() != 1 || rhs.rows() != 1) throw SemanticError("comparison operands must be scalar");
        const bool greater = op == Tok::ge || op == Tok::gt;
        const AffineExpr& hi = greater ? lhs : rhs;
        const AffineExpr& lo = greater ? rhs : lhs;
        return Formula::literal(Predicate::affine((hi.A - lo.A).row(0).transpose(), hi.b(0) - lo.b(0)));
    }

    static double constant_scalar(const AffineExpr& e, const char* what) {
        if (e.rows() != 1 || !e.is_constant()) throw SemanticError(std::string(what) + " must be a constant scalar");
        return e.b(0);
    }

    AffineExpr constant(Eigen::VectorXd v) const {
        return {Eigen::MatrixXd::Zero(v.size(), layout_.total()), std::move(v)};
    }

    AffineExpr parse_expr() {
        const bool neg = accept(Tok::minus);
        AffineExpr acc = parse_term();
        if (neg) negate(acc);
        while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
            const bool minus = take().kind == Tok::minus;
            const std::size_t at = peek().pos;
            AffineExpr t = parse_term();
            if (t.rows() != acc.rows())
                throw SemanticError("dimension mismatch in sum (at " + std::to_string(at) + ")");
            if (minus) negate(t);
            acc.A += t.A;
            acc.b += t.b;
        }
        return acc;
    }

    static void negate(AffineExpr& e) {
        e.A = -e.A;
        e.b = -e.b;
    }

    AffineExpr parse_term() {
        AffineExpr acc = parse_factor();
        while (accept(Tok::star)) {
            const std::size_t at = peek().pos;
            AffineExpr rhs = parse_factor();
            if (acc.rows() == 1 && acc.is_constant()) {
                const double k = acc.b(0);
                acc = std::move(rhs);
                acc.A *= k;
                acc.b *= k;
            } else if (rhs.rows() == 1 && rhs.is_constant()) {
                acc.A *= rhs.b(0);
                acc.b *= rhs.b(0);
            } else {
                throw SemanticError("product of non-constant terms is not affine (at " + std::to_string(at) + ")");
            }
        }
        return acc;
    }

    AffineExpr parse_factor() {
        const Token& t = peek();
        if (t.kind == Tok::minus) {
            ++pos_;
            AffineExpr e = parse_factor();
            negate(e);
            return e;
        }
        if (t.kind == Tok::number) {
            ++pos_;
            return constant(Eigen::VectorXd::Constant(1, t.number));
        }
        if (t.kind == Tok::lbracket) {
            ++pos_;
            std::vector<double> vals;
            do {
                const bool neg = accept(Tok::minus);
                const double v = parse_number();
                vals.push_back(neg ? -v : v);
            } while (accept(Tok::comma));
            expect(Tok::rbracket, "']'");
            return constant(Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
        }
        if (t.kind == Tok::lparen) {
            ++pos_;
            AffineExpr e = parse_expr();
            expect(Tok::rparen, "')'");
            return e;
        }
        if (t.kind == Tok::ident && t.text == "dot") {
            ++pos_;
            expect(Tok::lparen, "'('");
            AffineExpr u = parse_expr();
            expect(Tok::comma, "','");
            AffineExpr v = parse_expr();
            expect(Tok::rparen, "')'");
            if (u.rows() != v.rows()) throw SemanticError("dot operands differ in dimension");
            if (!u.is_constant()) std::swap(u, v);
            if (!u.is_constant()) throw SemanticError("dot of two state-dependent vectors is not affine");
            return {u.b.transpose() * v.A, Eigen::VectorXd::Constant(1, u.b.dot(v.b))};
        }
        if (t.kind == Tok::ident && is_agent(t.text)) {
            ++pos_;
            const std::size_t agent = agent_index(t);
            const int off = layout_.offset(agent);
            const int dim = layout_.dim(agent);
            if (peek().kind == Tok::lbracket && peek(1).kind == Tok::number) {
                ++pos_;
                const Token& ct = take();
                const double c = ct.number;
                if (c != std::floor(c) || c < 1 || c > dim)
                    throw SemanticError("component index out of range for " + std::string(t.text));
                expect(Tok::rbracket, "']'");
                AffineExpr e = constant(Eigen::VectorXd::Zero(1));
                e.A(0, off + static_cast<int>(c) - 1) = 1.0;
                return e;
            }
            AffineExpr e = constant(Eigen::VectorXd::Zero(dim));
            for (int c = 0; c < dim; ++c) e.A(c, off + c) = 1.0;
            return e;
        }
        fail(t.kind == Tok::end ? std::string("unexpected end of input")
                                : "unexpected '" + std::string(t.text) + "'");
    }

    static bool is_agent(std::string_view s) {
        if (s.size() < 2 || s[0] != 'x') return false;
        for (std::size_t i = 1; i < s.size(); ++i)
            if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return true;
    }

    std::size_t agent_index(const Token& t) const {
        std::size_t k = 0;
        std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), k);
        if (k < 1 || k > layout_.agents())
            throw SemanticError("unknown agent " + std::string(t.text) + " (team has " +
                                std::to_string(layout_.agents()) + " agents)");
        return k - 1;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const StateLayout& layout_;
};

}  // namespace detail

/// Parse formula text over the stacked state described by `layout`.
inline Formula parse(std::string_view text, const StateLayout& layout) {
    return detail::Parser(text, layout).parse();
}

}  // namespace stlcbf
