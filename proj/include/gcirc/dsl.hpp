#pragma once

// Plain-text circuit description.
//
//   # comment
//   species P1 d=1e-7 [init=0]
//   input TF [value=0]
//   unit gene1:
//     produces P1 s=5e-6
//     repressed_by TF k=1e-6 h=2
//     activated_by P2 k=1e-6 h=2
//
// Concentrations in molar, time in minutes.  LF or CRLF line endings.

#include "gcirc/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace gcirc::dsl {

struct SourceDiagnostic {
    int line = 1;   ///< 1-based
    int column = 1; ///< 1-based, in bytes
    std::string code;
    std::string message;
};

struct ParseResult {
    std::optional<CircuitModel> model; ///< set iff diagnostics is empty
    std::vector<SourceDiagnostic> diagnostics;

    bool ok() const { return model.has_value(); }
};

namespace detail {

struct Token {
    std::string_view text;
    int column;
};

struct Location {
    int line;
    int column;
};

inline bool is_ident_start(char c)
{
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

inline bool is_ident_char(char c)
{
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '.' || c == '-';
}

inline bool valid_identifier(std::string_view s)
{
    if (s.empty() || !is_ident_start(s.front()))
        return false;
    return std::all_of(s.begin(), s.end(), is_ident_char);
}

inline std::optional<double> parse_number(std::string_view s)
{
    if (s.empty())
        return std::nullopt;
    if (s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline std::string format_number(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct SpeciesDecl {
    Species species;
    std::optional<double> input_value;
    Location loc;
    std::map<std::string, Location, std::less<>> attr_loc;
};

struct TermDecl {
    RegulationTerm term;
    Location loc;     ///< statement keyword
    Location ref_loc; ///< regulator id
    std::map<std::string, Location, std::less<>> attr_loc;
};

struct ProductDecl {
    ProductSpec product;
    Location loc;
    Location ref_loc;
    Location rate_loc;
};

struct UnitDecl {
    std::string id;
    Location loc;
    std::vector<TermDecl> terms;
    std::vector<ProductDecl> products;
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ParseResult run()
    {
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text_.size()) {
            std::size_t end = text_.find('\n', pos);
            if (end == std::string_view::npos)
                end = text_.size();
            std::string_view line = text_.substr(pos, end - pos);
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            ++line_no;
            parse_line(line, line_no);
            if (end == text_.size())
                break;
            pos = end + 1;
        }
        check_semantics();

        ParseResult r;
        if (diags_.empty()) {
            CircuitModel m = build();
            // Anything validate still objects to is reported at the top.
            for (const auto& d : validate(m))
                error({1, 1}, std::string(to_string(d.code)), d.element + ": " + d.message);
            if (diags_.empty())
                r.model = std::move(m);
        }
        std::stable_sort(diags_.begin(), diags_.end(), [](const auto& a, const auto& b) {
            return a.line != b.line ? a.line < b.line : a.column < b.column;
        });
        r.diagnostics = std::move(diags_);
        return r;
    }

private:
    void error(Location at, std::string code, std::string message)
    {
        diags_.push_back({at.line, at.column, std::move(code), std::move(message)});
    }

    // Splits on blanks after stripping the comment; reports stray bytes.
    bool tokenize(std::string_view line, int line_no, std::vector<Token>& out)
    {
        bool ok = true;
        std::size_t i = 0;
        while (i < line.size()) {
            const char c = line[i];
            if (c == '#')
                break;
            if (c == ' ' || c == '\t') {
                ++i;
                continue;
            }
            const std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '#') {
                const auto u = static_cast<unsigned char>(line[i]);
                if (u < 0x21 || u > 0x7e) {
                    if (ok)
                        error({line_no, static_cast<int>(i) + 1}, "lexical",
                              "unexpected character (byte " + std::to_string(u) + ")");
                    ok = false;
                }
                ++i;
            }
            out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
        }
        return ok;
    }

    void parse_line(std::string_view line, int line_no)
    {
        std::vector<Token> toks;
        if (!tokenize(line, line_no, toks) || toks.empty())
            return;
        const bool indented = toks.front().column > 1;
        const std::string_view kw = toks.front().text;
        const Location at{line_no, toks.front().column};

        if (kw == "species" || kw == "input" || kw == "unit") {
            if (indented) {
                error(at, "unexpected-indent", "'" + std::string(kw) + "' must start at column 1");
                return;
            }
            current_unit_.reset();
            if (kw == "unit")
                parse_unit(toks, line_no);
            else
                parse_species(toks, line_no, kw == "input");
            return;
        }
        if (kw == "produces" || kw == "activated_by" || kw == "repressed_by") {
            if (!indented) {
                error(at, "missing-indent", "'" + std::string(kw) + "' must be indented under a unit");
                return;
            }
            if (!current_unit_) {
                error(at, "orphan-statement", "'" + std::string(kw) + "' outside a unit block");
                return;
            }
            if (kw == "produces")
                parse_product(toks, line_no);
            else
                parse_term(toks, line_no, kw == "activated_by" ? RegulationMode::activation
                                                               : RegulationMode::repression);
            return;
        }
        error(at, "unknown-keyword", "unknown keyword '" + std::string(kw) + "'");
    }

    // Reads `<id>` at toks[1]; reports and returns false if absent or malformed.
    bool read_id(const std::vector<Token>& toks, int line_no, std::string_view what, std::string& id)
    {
        if (toks.size() < 2) {
            const auto& last = toks.back();
            error({line_no, last.column + static_cast<int>(last.text.size())}, "syntax",
                  "expected " + std::string(what) + " identifier");
            return false;
        }
        if (!valid_identifier(toks[1].text)) {
            error({line_no, toks[1].column}, "lexical",
                  "invalid identifier '" + std::string(toks[1].text) + "'");
            return false;
        }
        id = std::string(toks[1].text);
        return true;
    }

    struct Attr {
        double value;
        Location loc;
    };

    // Parses key=value tokens from toks[first..]; `allowed` lists permitted keys.
    std::optional<std::map<std::string, Attr, std::less<>>>
    read_attrs(const std::vector<Token>& toks, std::size_t first, int line_no,
               std::initializer_list<std::string_view> allowed,
               std::initializer_list<std::string_view> required, Location stmt)
    {
        std::map<std::string, Attr, std::less<>> attrs;
        bool ok = true;
        for (std::size_t i = first; i < toks.size(); ++i) {
            const Token& t = toks[i];
            const Location at{line_no, t.column};
            const auto eq = t.text.find('=');
            if (eq == std::string_view::npos) {
                error(at, "syntax", "expected key=value, found '" + std::string(t.text) + "'");
                ok = false;
                continue;
            }
            const std::string_view key = t.text.substr(0, eq);
            const std::string_view val = t.text.substr(eq + 1);
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                error(at, "unknown-attribute", "unknown attribute '" + std::string(key) + "'");
                ok = false;
                continue;
            }
            const Location vat{line_no, t.column + static_cast<int>(eq) + 1};
            const auto v = parse_number(val);
            if (!v) {
                error(vat, "lexical", "malformed number '" + std::string(val) + "'");
                ok = false;
                continue;
            }
            if (!attrs.emplace(std::string(key), Attr{*v, vat}).second) {
                error(at, "duplicate-attribute", "attribute '" + std::string(key) + "' given twice");
                ok = false;
            }
        }
        for (auto key : required) {
            if (!attrs.contains(key)) {
                error(stmt, "missing-attribute", "missing required attribute '" + std::string(key) + "='");
                ok = false;
            }
        }
        if (!ok)
            return std::nullopt;
        return attrs;
    }

    void parse_species(const std::vector<Token>& toks, int line_no, bool is_input)
    {
        const Location at{line_no, toks.front().column};
        std::string id;
        if (!read_id(toks, line_no, is_input ? "input" : "species", id))
            return;
        auto attrs = is_input ? read_attrs(toks, 2, line_no, {"value"}, {}, at)
                              : read_attrs(toks, 2, line_no, {"d", "init"}, {"d"}, at);
        if (!attrs)
            return;
        SpeciesDecl decl;
        decl.species.id = id;
        decl.loc = {line_no, toks[1].column};
        if (is_input) {
            decl.species.kind = SpeciesKind::clamped_input;
            if (auto it = attrs->find("value"); it != attrs->end())
                decl.input_value = it->second.value;
        } else {
            decl.species.degradation_rate = attrs->at("d").value;
            if (auto it = attrs->find("init"); it != attrs->end())
                decl.species.initial_concentration = it->second.value;
        }
        for (const auto& [k, a] : *attrs)
            decl.attr_loc.emplace(k, a.loc);
        species_.push_back(std::move(decl));
    }

    void parse_unit(const std::vector<Token>& toks, int line_no)
    {
        // Accepts `unit id:` and `unit id :`.
        std::vector<Token> t = toks;
        if (t.size() == 3 && t[2].text == ":") {
            t.pop_back();
        } else if (t.size() == 2 && t[1].text.size() > 1 && t[1].text.back() == ':') {
            t[1].text.remove_suffix(1);
        } else if (t.size() == 2) {
            error({line_no, t[1].column + static_cast<int>(t[1].text.size())}, "syntax",
                  "expected ':' after unit identifier");
            return;
        } else if (t.size() > 2) {
            error({line_no, t[2].column}, "syntax", "unexpected token after unit identifier");
            return;
        }
        std::string id;
        if (!read_id(t, line_no, "unit", id))
            return;
        units_.push_back({id, {line_no, t[1].column}, {}, {}});
        current_unit_ = units_.size() - 1;
    }

    void parse_product(const std::vector<Token>& toks, int line_no)
    {
        const Location at{line_no, toks.front().column};
        std::string id;
        if (!read_id(toks, line_no, "product", id))
            return;
        auto attrs = read_attrs(toks, 2, line_no, {"s"}, {"s"}, at);
        if (!attrs)
            return;
        const Attr& s = attrs->at("s");
        units_[*current_unit_].products.push_back({{id, s.value}, at, {line_no, toks[1].column}, s.loc});
    }

    void parse_term(const std::vector<Token>& toks, int line_no, RegulationMode mode)
    {
        const Location at{line_no, toks.front().column};
        std::string id;
        if (!read_id(toks, line_no, "regulator", id))
            return;
        auto attrs = read_attrs(toks, 2, line_no, {"k", "h"}, {"k", "h"}, at);
        if (!attrs)
            return;
        TermDecl decl;
        decl.term = {id, mode, attrs->at("k").value, attrs->at("h").value};
        decl.loc = at;
        decl.ref_loc = {line_no, toks[1].column};
        for (const auto& [k, a] : *attrs)
            decl.attr_loc.emplace(k, a.loc);
        units_[*current_unit_].terms.push_back(std::move(decl));
    }

    void check_semantics()
    {
        std::map<std::string_view, const SpeciesDecl*, std::less<>> by_id;
        std::size_t n_state = 0;
        for (const auto& s : species_) {
            if (!by_id.emplace(s.species.id, &s).second)
                error(s.loc, "duplicate-id", "'" + s.species.id + "' is already declared");
            if (s.species.kind == SpeciesKind::state) {
                ++n_state;
                if (!(s.species.degradation_rate > 0.0))
                    error(s.attr_loc.at("d"), "parameter-range", "degradation rate must be positive");
                if (s.species.initial_concentration < 0.0)
                    error(s.attr_loc.at("init"), "parameter-range", "initial concentration must be >= 0");
            } else if (s.input_value && *s.input_value < 0.0) {
                error(s.attr_loc.at("value"), "parameter-range", "input value must be >= 0");
            }
        }
        if (n_state == 0 && diags_.empty())
            error({1, 1}, "empty-model", "no species declared");

        std::set<std::string_view> unit_ids;
        for (const auto& u : units_) {
            if (!unit_ids.insert(u.id).second || by_id.contains(u.id))
                error(u.loc, "duplicate-id", "'" + u.id + "' is already declared");
            if (u.products.empty())
                error(u.loc, "missing-products", "unit '" + u.id + "' produces nothing");

            std::set<std::string_view> regs;
            for (const auto& t : u.terms) {
                if (!by_id.contains(t.term.regulator))
                    error(t.ref_loc, "unresolved-reference",
                          "'" + t.term.regulator + "' is not a declared species or input");
                if (!regs.insert(t.term.regulator).second)
                    error(t.loc, "duplicate-term",
                          "'" + t.term.regulator + "' already regulates unit '" + u.id + "'");
                if (!(t.term.hill_constant > 0.0))
                    error(t.attr_loc.at("k"), "parameter-range", "Hill constant must be positive");
                if (!(t.term.hill_coefficient >= 1.0))
                    error(t.attr_loc.at("h"), "parameter-range", "Hill coefficient must be >= 1");
            }
            std::set<std::string_view> prods;
            for (const auto& p : u.products) {
                auto it = by_id.find(p.product.product);
                if (it == by_id.end())
                    error(p.ref_loc, "unresolved-reference",
                          "'" + p.product.product + "' is not a declared species");
                else if (it->second->species.kind != SpeciesKind::state)
                    error(p.ref_loc, "produced-input", "input '" + p.product.product + "' cannot be produced");
                if (!prods.insert(p.product.product).second)
                    error(p.loc, "duplicate-id", "'" + p.product.product + "' is already produced by this unit");
                if (!(p.product.max_rate > 0.0))
                    error(p.rate_loc, "parameter-range", "maximal rate must be positive");
            }
        }
    }

    CircuitModel build() const
    {
        CircuitModel m;
        for (const auto& s : species_) {
            m.species.push_back(s.species);
            if (s.input_value)
                m.input_values.emplace(s.species.id, *s.input_value);
        }
        for (const auto& u : units_) {
            TranscriptionUnit tu{u.id, {}, {}};
            for (const auto& t : u.terms)
                tu.terms.push_back(t.term);
            for (const auto& p : u.products)
                tu.products.push_back(p.product);
            m.units.push_back(std::move(tu));
        }
        return m;
    }

    std::string_view text_;
    std::vector<SourceDiagnostic> diags_;
    std::vector<SpeciesDecl> species_;
    std::vector<UnitDecl> units_;
    std::optional<std::size_t> current_unit_;
};

} // namespace detail

/// Parses circuit text.  Never throws on malformed input; every problem is
/// returned as a located diagnostic.
inline ParseResult parse(std::string_view text)
{
    try {
        return detail::Parser(text).run();
    } catch (const std::exception& e) {
        ParseResult r;
        r.diagnostics.push_back({1, 1, "internal", e.what()});
        return r;
    }
}

/// Canonical text: state species, then inputs, then units, each sorted by id;
/// within a unit, products then terms sorted by id.  Numbers use the
/// shortest decimal form that round-trips.
inline std::string serialize(const CircuitModel& model)
{
    using detail::format_number;
    auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };

    std::vector<Species> states, inputs;
    for (const auto& s : model.species)
        (s.kind == SpeciesKind::state ? states : inputs).push_back(s);
    std::sort(states.begin(), states.end(), by_id);
    std::sort(inputs.begin(), inputs.end(), by_id);

    std::string out;
    for (const auto& s : states) {
        out += "species " + s.id + " d=" + format_number(s.degradation_rate);
        if (s.initial_concentration != 0.0)
            out += " init=" + format_number(s.initial_concentration);
        out += '\n';
    }
    if (!inputs.empty())
        out += '\n';
    for (const auto& s : inputs) {
        out += "input " + s.id;
        if (auto it = model.input_values.find(s.id); it != model.input_values.end())
            out += " value=" + format_number(it->second);
        out += '\n';
    }

    std::vector<TranscriptionUnit> units = model.units;
    std::sort(units.begin(), units.end(), by_id);
    for (auto& u : units) {
        std::sort(u.products.begin(), u.products.end(),
                  [](const auto& a, const auto& b) { return a.product < b.product; });
        std::sort(u.terms.begin(), u.terms.end(),
                  [](const auto& a, const auto& b) { return a.regulator < b.regulator; });
        out += "\nunit " + u.id + ":\n";
        for (const auto& p : u.products)
            out += "  produces " + p.product + " s=" + format_number(p.max_rate) + '\n';
        for (const auto& t : u.terms) {
            out += t.mode == RegulationMode::activation ? "  activated_by " : "  repressed_by ";
            out += t.regulator + " k=" + format_number(t.hill_constant) +
                   " h=" + format_number(t.hill_coefficient) + '\n';
        }
    }
    return out;
}

} // namespace gcirc::dsl
