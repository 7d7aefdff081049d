#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>

#include "baumbott/baumbott.hpp"

#include <json.hpp>

using namespace baumbott;
using json = nlohmann::json;

namespace {

VectorField benchmark_field() {
    BiPoly P(2), Q(2);
    P.set_coeff(2, 0, 1);
    P.set_coeff(1, 0, -2);
    Q.set_coeff(0, 2, 1);
    Q.set_coeff(0, 1, -2);
    return VectorField(P, Q);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::optional<errc> thrown_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const error& e) {
        return e.code();
    }
    return std::nullopt;
}

// Run the command-line tool; returns the exit code, stdout+stderr in `out`.
int run_cli(const std::string& args, std::string& out) {
    const std::string capture = "io_cli_capture.txt";
    const int raw = std::system((std::string(BB_CLI_PATH) + " " + args + " > " + capture +
                                 " 2>&1")
                                    .c_str());
    out = slurp(capture);
    std::remove(capture.c_str());
    if (raw == -1) return -1;
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -2;
}

// Report bodies must be byte-identical across runs once the one timing
// field is dropped.
std::string strip_wall_time(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("wall_time_ms") == std::string::npos) out << line << '\n';
    return out.str();
}

}  // namespace

TEST_CASE("field file round trip is bit exact") {
    const VectorField v = random_field(7, 2);
    write_field_file("io_cli_roundtrip.json", v, "trip", 7);
    const FieldFile f = read_field_file("io_cli_roundtrip.json");
    std::remove("io_cli_roundtrip.json");

    REQUIRE(f.degree == 2);
    REQUIRE(f.label.has_value());
    CHECK(*f.label == "trip");
    REQUIRE(f.seed.has_value());
    CHECK(*f.seed == 7);

    const VectorField w = to_vector_field(f);
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; i + j <= 2; ++j) {
            CHECK(w.P().coeff(i, j) == v.P().coeff(i, j));  // exact, not approximate
            CHECK(w.Q().coeff(i, j) == v.Q().coeff(i, j));
        }
    CHECK(field_digest(w) == field_digest(v));
}

TEST_CASE("field digest is frozen") {
    // regression anchors; a change here silently breaks every recorded digest
    CHECK(field_digest(benchmark_field()) == "f00fbd93aec0b204");
    CHECK(field_digest(random_field(7, 2)) == "f38fac83f099d8fe");
    CHECK(field_digest(random_field(8, 2)) != field_digest(random_field(7, 2)));
}

TEST_CASE("seeded generator is frozen") {
    Rng raw(2024);
    CHECK(raw.raw() == 11302035004393361974ull);
    CHECK(raw.raw() == 14659923886798723969ull);
    CHECK(raw.raw() == 4900509279141520181ull);

    Rng uni(2024);
    CHECK(uni.uniform() == 0.612684545263525);

    Rng cn(2024);
    const cplx z = cn.complex_normal();
    CHECK(z.real() == 0.27004547143323393);
    CHECK(z.imag() == -0.93573032056760985);

    const VectorField f = random_field(7, 2);
    CHECK(f.P().coeff(0, 0).real() == 1.1252896436493911);
    CHECK(f.P().coeff(0, 0).imag() == -0.37109899741651659);
}

TEST_CASE("malformed field files are rejected with positions") {
    SECTION("missing file") {
        CHECK(thrown_code([] { parse_field_file("io_cli_no_such_file.json"); }) ==
              errc::parse_error);
    }
    SECTION("syntax error carries line and column") {
        spit("io_cli_broken.json", "{\"degree\": 2,\n \"P\": [oops]}\n");
        try {
            parse_field_file("io_cli_broken.json");
            FAIL("expected a parse error");
        } catch (const error& e) {
            CHECK(e.code() == errc::parse_error);
            CHECK(std::string(e.what()).find("io_cli_broken.json:2:") != std::string::npos);
        }
        std::remove("io_cli_broken.json");
    }
    SECTION("wrong coefficient count") {
        json j{{"degree", 2},
               {"P", json::array({{1.0, 0.0}, {0.0, 0.0}})},
               {"Q", json::array({{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0},
                                  {0.0, 0.0}})}};
        CHECK(thrown_code([&] { field_file_from_json(j); }) == errc::dimension_mismatch);
    }
    SECTION("non-finite coefficient") {
        FieldFile f = to_field_file(benchmark_field());
        json j = field_file_json(f);
        j["P"][0][0] = "NaN";  // strings never silently coerce
        CHECK(thrown_code([&] { field_file_from_json(j); }) == errc::parse_error);
    }
    SECTION("degree out of range") {
        json j{{"degree", 0}, {"P", json::array()}, {"Q", json::array()}};
        CHECK(thrown_code([&] { field_file_from_json(j); }) == errc::dimension_mismatch);
    }
}

TEST_CASE("cli generates and analyzes its own files") {
    std::string out;
    REQUIRE(run_cli("gen --seed 7 --degree 2 --out io_cli_gen.json", out) == 0);

    const FieldFile f = read_field_file("io_cli_gen.json");
    const VectorField direct = random_field(7, 2);
    CHECK(to_vector_field(f).P().coeff(2, 0) == direct.P().coeff(2, 0));

    REQUIRE(run_cli("singular --input io_cli_gen.json", out) == 0);
    std::remove("io_cli_gen.json");
    const json rep = json::parse(out);
    CHECK(rep["errors"].empty());
    CHECK(rep["results"]["count_finite"] == 4);
    CHECK(rep["results"]["count_infinite"] == 3);
    CHECK(rep["results"]["count_total"] == 7);
    CHECK(rep["input_digest"] == field_digest(direct));
    CHECK(rep.contains("wall_time_ms"));
    CHECK(rep["command"] == "singular --input io_cli_gen.json");
}

TEST_CASE("cli verify batch aggregates residuals") {
    std::string out;
    REQUIRE(run_cli("verify --random --seed 1 --count 10", out) == 0);
    const json rep = json::parse(out);
    CHECK(rep["results"]["fields"] == 10);
    CHECK(rep["results"]["rejected"].get<int>() + rep["results"]["evaluated"].get<int>() == 10);
    CHECK(rep["results"]["max_baum_bott_residual"].get<double>() < 1e-8);
    CHECK(rep["results"]["max_camacho_sad_residual"].get<double>() < 1e-8);
    CHECK(rep["results"]["all_ok"] == true);
    CHECK(rep["results"]["rows"].size() == 10);
}

TEST_CASE("cli reports are deterministic") {
    std::string a, b;
    REQUIRE(run_cli("indices --random --seed 5", a) == 0);
    REQUIRE(run_cli("indices --random --seed 5", b) == 0);
    CHECK(strip_wall_time(a) == strip_wall_time(b));
    CHECK(a.find("wall_time_ms") != std::string::npos);
}

TEST_CASE("cli rejects bad input with exit code 2") {
    json dic{{"degree", 2}, {"P", json::array()}, {"Q", json::array()}};
    for (int k = 0; k < 6; ++k) {
        dic["P"].push_back({0.0, 0.0});
        dic["Q"].push_back({0.0, 0.0});
    }
    dic["P"][3] = {1.0, 0.0};  // P = x^2, Q = x y: radial top part
    dic["Q"][4] = {1.0, 0.0};
    spit("io_cli_dicritical.json", dic.dump());

    std::string out;
    CHECK(run_cli("singular --input io_cli_dicritical.json", out) == 2);
    std::remove("io_cli_dicritical.json");
    const json rep = json::parse(out);
    REQUIRE(rep["errors"].size() == 1);
    CHECK(rep["errors"][0]["code"] == "DicriticalAtInfinity");

    CHECK(run_cli("singular", out) == 2);
    CHECK(json::parse(out)["errors"][0]["code"] == "ParseError");

    CHECK(run_cli("indices --input io_cli_no_such_file.json", out) == 2);
    CHECK(json::parse(out)["errors"][0]["code"] == "ParseError");

    CHECK(run_cli("--definitely-not-a-flag", out) == 2);
}

TEST_CASE("cli csv rows parse as numbers") {
    std::string out;
    REQUIRE(run_cli("singular --random --seed 7 --csv", out) == 0);
    std::istringstream in(out);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header.rfind("kind,chart,", 0) == 0);
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        // a_re sits in column 3; it must parse back to a double exactly
        std::istringstream cells(line);
        std::string cell;
        for (int k = 0; k < 3; ++k) REQUIRE(std::getline(cells, cell, ','));
        size_t used = 0;
        (void)std::stod(cell, &used);
        CHECK(used == cell.size());
    }
    CHECK(rows == 7);
}

TEST_CASE("cli holonomy agrees with the library") {
    std::string out;
    REQUIRE(run_cli("holonomy --random --seed 424242", out) == 0);
    const json rep = json::parse(out);
    const json& res = rep["results"];
    REQUIRE(res["points"].size() == 3);
    for (const json& p : res["points"]) {
        CHECK(p["ok"] == true);
        CHECK(p["abs_error"].get<double>() < 1e-4);
    }
    CHECK(res["generator_product"]["ok"] == true);
    CHECK(res["generator_product"]["residual"].get<double>() < 1e-6);

    const VectorField v = random_field(424242, 2);
    const cplx direct = holonomy_multiplier(v, 0);
    const json& m = res["points"][0]["multiplier"];
    CHECK(m[0].get<double>() == Catch::Approx(direct.real()).margin(1e-12));
    CHECK(m[1].get<double>() == Catch::Approx(direct.imag()).margin(1e-12));
}
