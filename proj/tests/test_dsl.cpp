#include "support.hpp"

#include "gcirc/catalog.hpp"
#include "gcirc/dsl.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace gcirc;

namespace {

std::vector<std::string> split_lines(const std::string& s)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto end = s.find('\n', pos);
        if (end == std::string::npos) {
            if (pos < s.size())
                out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

std::string join_lines(const std::vector<std::string>& lines)
{
    std::string s;
    for (const auto& l : lines)
        s += l + '\n';
    return s;
}

CircuitModel with_all_inputs(CircuitModel m, double v)
{
    for (const auto& id : m.input_ids())
        m = m.with_input(id, v);
    return m;
}

bool has_code(const dsl::ParseResult& r, std::string_view code, int line)
{
    for (const auto& d : r.diagnostics)
        if (d.code == code && d.line == line)
            return true;
    return false;
}

} // namespace

TEST_CASE("Shipped circuit files match their catalog twins")
{
    for (const auto& e : catalog::entries()) {
        CAPTURE(e.name);
        const auto text = gtest::read_file(gtest::source_path("circuits/" + std::string(e.name) + ".gc"));
        REQUIRE_FALSE(text.empty());
        const auto r = dsl::parse(text);
        REQUIRE(r.ok());
        const auto twin = catalog::build(e.name);
        for (double v : {0.0, 2e-6, 7e-6})
            CHECK(gtest::vector_field_distance(with_all_inputs(*r.model, v), with_all_inputs(twin, v), 100, 42) <=
                  1e-12);
        CHECK(dsl::serialize(*r.model) == dsl::serialize(twin));
    }
}

TEST_CASE("Catalog circuits round-trip through canonical text")
{
    for (const auto& e : catalog::entries()) {
        CAPTURE(e.name);
        const auto m = catalog::build(e.name);
        const auto text = dsl::serialize(m);
        const auto r = dsl::parse(text);
        REQUIRE(r.ok());
        CHECK(dsl::serialize(*r.model) == text);
        CHECK(gtest::vector_field_distance(with_all_inputs(*r.model, 3e-6), with_all_inputs(m, 3e-6), 100, 8) == 0.0);
    }
}

TEST_CASE("Canonical text ignores declaration order, comments and line endings")
{
    const std::string a = "species P1 d=1e-7\nspecies P2 d=5e-7\ninput TF value=0\n"
                          "unit gene2:\n  produces P2 s=1e-6\n  repressed_by P1 k=1e-6 h=2\n"
                          "unit gene1:\n  produces P1 s=5e-6\n  repressed_by TF k=2e-7 h=2\n  repressed_by P2 k=1e-6 h=2\n";
    const std::string b = "# same circuit\r\nunit gene1:\r\n\trepressed_by P2 k=1.0e-6 h=2.0\r\n"
                          "\tproduces P1 s=0.000005   # trailing comment\r\n\trepressed_by TF k=2E-7 h=2\r\n\r\n"
                          "input TF value=0\r\nspecies P2 d=5e-7\r\nspecies P1 d=1e-7\r\n"
                          "unit gene2 :\r\n  repressed_by P1 k=1e-6 h=2\r\n  produces P2 s=1e-6";
    const auto ra = dsl::parse(a), rb = dsl::parse(b);
    REQUIRE(ra.ok());
    REQUIRE(rb.ok());
    CHECK(dsl::serialize(*ra.model) == dsl::serialize(*rb.model));
    CHECK(dsl::serialize(*ra.model) == dsl::serialize(catalog::relay_switch()));
    CHECK(dsl::serialize(*ra.model).find('\r') == std::string::npos);
}

TEST_CASE("Serialization is idempotent")
{
    for (const auto& e : catalog::entries()) {
        const auto text = gtest::read_file(gtest::source_path("circuits/" + std::string(e.name) + ".gc"));
        const auto once = dsl::serialize(*dsl::parse(text).model);
        const auto twice = dsl::serialize(*dsl::parse(once).model);
        CHECK(once == twice);
    }
}

TEST_CASE("Numbers use the shortest round-trip form")
{
    CircuitModel m;
    m.species = {{"X", 0.1 + 0.2, SpeciesKind::state, 1.0 / 3.0}};
    m.units = {{"g", {}, {{"X", 1e-6}}}};
    const auto text = dsl::serialize(m);
    CHECK(text.find("d=0.30000000000000004") != std::string::npos);
    CHECK(text.find("init=0.3333333333333333") != std::string::npos);
    const auto back = dsl::parse(text);
    REQUIRE(back.ok());
    CHECK(back.model->species[0].degradation_rate == 0.1 + 0.2);
    CHECK(back.model->species[0].initial_concentration == 1.0 / 3.0);
}

TEST_CASE("Diagnostics")
{
    SECTION("empty input")
    {
        for (const char* text : {"", "\n\n", "# nothing here\n"}) {
            const auto r = dsl::parse(text);
            REQUIRE(r.diagnostics.size() == 1);
            CHECK(r.diagnostics[0].code == "empty-model");
            CHECK(r.diagnostics[0].line == 1);
        }
    }
    SECTION("unresolved reference is located")
    {
        const auto r = dsl::parse("species P1 d=1e-7\nunit g:\n  produces P1 s=1e-6\n  activated_by X k=1e-6 h=2\n");
        REQUIRE(r.diagnostics.size() == 1);
        CHECK(r.diagnostics[0].code == "unresolved-reference");
        CHECK(r.diagnostics[0].line == 4);
        CHECK(r.diagnostics[0].column == 16);
    }
    SECTION("one code per problem")
    {
        const std::string base = "species P1 d=1e-7\ninput TF\nunit g:\n  produces P1 s=1e-6\n";
        CHECK(has_code(dsl::parse(base + "  frobnicate P1\n"), "unknown-keyword", 5));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=1e-6x h=2\n"), "lexical", 5));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=1e-6 h=2\u00e9\n"), "lexical", 5));
        CHECK(has_code(dsl::parse(base + "species P1 d=1e-7\n"), "duplicate-id", 5));
        CHECK(has_code(dsl::parse(base + "unit P1:\n  produces P1 s=1\n"), "duplicate-id", 5));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=-1e-6 h=2\n"), "parameter-range", 5));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=1e-6 h=0.5\n"), "parameter-range", 5));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=1e-6 h=2\n  repressed_by TF k=1e-6 h=2\n"),
                       "duplicate-term", 6));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=1e-6\n"), "missing-attribute", 5));
        CHECK(has_code(dsl::parse(base + "  activated_by TF k=1e-6 h=2 q=1\n"), "unknown-attribute", 5));
        CHECK(has_code(dsl::parse(base + "  produces TF s=1e-6\n"), "produced-input", 5));
        CHECK(has_code(dsl::parse(base + "unit h:\n"), "missing-products", 5));
        CHECK(has_code(dsl::parse(base + "unit h\n  produces P1 s=1\n"), "syntax", 5));
        CHECK(has_code(dsl::parse("produces P1 s=1\nspecies P1 d=1\n"), "missing-indent", 1));
        CHECK(has_code(dsl::parse("species P1 d=1\n  produces P1 s=1\n"), "orphan-statement", 2));
        CHECK(has_code(dsl::parse("  species P1 d=1\n"), "unexpected-indent", 1));
        CHECK(has_code(dsl::parse("species 1P d=1\n"), "lexical", 1));
        CHECK(has_code(dsl::parse("species P1 d=0\n"), "parameter-range", 1));
        CHECK(has_code(dsl::parse("species P1 d=1 d=2\n"), "duplicate-attribute", 1));
        CHECK(has_code(dsl::parse("species P1 d=1\ninput TF value=-1\n"), "parameter-range", 2));
    }
}

TEST_CASE("Single-token corruptions are reported on the corrupted line")
{
    const auto lines = split_lines(gtest::read_file(gtest::source_path("circuits/type2-loop.gc")));
    REQUIRE(!lines.empty());
    int checked = 0;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto& line = lines[ln];
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
            continue;
        // Token spans on this line.
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (std::size_t i = 0; i < line.size();) {
            if (line[i] == ' ' || line[i] == '\t') {
                ++i;
                continue;
            }
            if (line[i] == '#')
                break;
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '#')
                ++j;
            spans.emplace_back(i, j - i);
            i = j;
        }
        for (const auto& [start, len] : spans) {
            for (const char* junk : {"@@", "1x", "k=abc"}) {
                auto mutated = lines;
                mutated[ln] = line.substr(0, start) + junk + line.substr(start + len);
                const auto r = dsl::parse(join_lines(mutated));
                CAPTURE(mutated[ln]);
                REQUIRE_FALSE(r.ok());
                const bool on_line = std::any_of(r.diagnostics.begin(), r.diagnostics.end(), [&](const auto& d) {
                    return d.line == static_cast<int>(ln) + 1;
                });
                CHECK(on_line);
                ++checked;
            }
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("Parser survives arbitrary input")
{
    std::mt19937_64 rng(2024);
    const auto seed_text = gtest::read_file(gtest::source_path("circuits/type1-loop.gc"));
    std::uniform_int_distribution<int> byte(0, 255);
    auto check = [](const std::string& text) {
        dsl::ParseResult r;
        REQUIRE_NOTHROW(r = dsl::parse(text));
        const long n_lines = std::count(text.begin(), text.end(), '\n') + 1;
        if (!r.ok()) {
            REQUIRE_FALSE(r.diagnostics.empty());
            for (const auto& d : r.diagnostics) {
                CHECK(d.line >= 1);
                CHECK(d.line <= n_lines);
                CHECK(d.column >= 1);
            }
        }
    };
    for (int trial = 0; trial < 1000; ++trial) {
        std::string text(static_cast<std::size_t>(byte(rng)) * 4, '\0');
        for (auto& ch : text)
            ch = static_cast<char>(byte(rng));
        check(text);
    }
    for (int trial = 0; trial < 2000; ++trial) {
        std::string text = seed_text;
        const int edits = 1 + byte(rng) % 8;
        for (int e = 0; e < edits && !text.empty(); ++e) {
            const std::size_t pos = static_cast<std::size_t>(rng() % text.size());
            switch (byte(rng) % 3) {
            case 0: text[pos] = static_cast<char>(byte(rng)); break;
            case 1: text.erase(pos, 1 + rng() % 5); break;
            default: text.insert(pos, 1, static_cast<char>(byte(rng))); break;
            }
        }
        check(text);
    }
}
