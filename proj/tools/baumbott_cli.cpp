// Command-line front end: field generation, singular-point inventories,
// index-sum verification, moduli rank, Darboux scans, fiber search, and
// holonomy, with JSON reports (or --csv tables) on standard output.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "baumbott/baumbott.hpp"

using namespace baumbott;
using json = nlohmann::json;

namespace {

json cval(const cplx& z) { return json::array({z.real(), z.imag()}); }

json cval(const std::optional<cplx>& z) {
    return z ? cval(*z) : json();
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt17(const cplx& z) { return fmt17(z.real()) + "," + fmt17(z.imag()); }

cplx parse_complex(const std::string& s) {
    const auto comma = s.find(',');
    try {
        if (comma == std::string::npos) return cplx(std::stod(s), 0.0);
        return cplx(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
    } catch (const std::exception&) {
        throw error(errc::parse_error, "cannot parse complex number '" + s + "'");
    }
}

std::vector<cplx> parse_complex_list(const std::string& s) {
    std::vector<cplx> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        const size_t semi = s.find(';', pos);
        const std::string item =
            s.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos);
        if (!item.empty()) out.push_back(parse_complex(item));
        if (semi == std::string::npos) break;
        pos = semi + 1;
    }
    if (out.empty()) throw error(errc::parse_error, "empty list '" + s + "'");
    return out;
}

struct InputOpts {
    std::string input;
    bool random = false;
    std::uint64_t seed = 1;
    int degree = 2;
    int count = 1;
    double tol = 1e-8;
    bool csv = false;
};

void add_input_opts(CLI::App* sub, InputOpts& o, bool batch = false) {
    sub->add_option("--input", o.input, "field file (JSON)");
    sub->add_flag("--random", o.random, "draw the field from the seeded generator");
    sub->add_option("--seed", o.seed, "generator seed");
    sub->add_option("--degree", o.degree, "degree for generated fields");
    if (batch) sub->add_option("--count", o.count, "number of seeded fields");
    sub->add_option("--tol", o.tol, "acceptance tolerance for residual checks");
    sub->add_flag("--csv", o.csv, "tabular output instead of a JSON report");
}

VectorField single_field(const InputOpts& o) {
    if (!o.input.empty()) return parse_field_file(o.input);
    if (o.random) return random_field(o.seed, o.degree);
    throw error(errc::parse_error, "need --input PATH or --random");
}

std::string batch_digest(const InputOpts& o) {
    return detail::fnv1a_hex("random seed=" + std::to_string(o.seed) +
                             " count=" + std::to_string(o.count) +
                             " degree=" + std::to_string(o.degree));
}

struct Report {
    std::string command;
    std::string input_digest;
    json results = json::object();
    json errors = json::array();
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void emit() const {
        json j;
        j["command"] = command;
        j["input_digest"] = input_digest;
        j["results"] = results;
        j["errors"] = errors;
        j["wall_time_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("%s\n", j.dump(2).c_str());
    }
};

json point_json(const SingPoint& p) {
    json j;
    if (p.at_infinity) {
        j["chart"] = p.chart;
        j["v"] = cval(p.vparam);
        j["direction"] = json::array({cval(p.dir_x), cval(p.dir_y)});
    } else {
        j["x"] = cval(p.x);
        j["y"] = cval(p.y);
        j["residual"] = p.residual;
    }
    j["lambda"] = cval(p.lambda);
    j["mu"] = cval(p.mu);
    j["ratio"] = cval(p.char_ratio);
    j["nu"] = cval(p.nu);
    j["degenerate"] = p.degenerate;
    return j;
}

void point_csv_row(const SingPoint& p) {
    const cplx a = p.at_infinity ? p.dir_x : p.x;
    const cplx b = p.at_infinity ? p.dir_y : p.y;
    const cplx ratio = p.char_ratio.value_or(cplx(NAN, NAN));
    const cplx nu = p.nu.value_or(cplx(NAN, NAN));
    std::printf("%s,%d,%s,%s,%s,%s,%s,%s,%d,%s\n", p.at_infinity ? "infinite" : "finite",
                p.chart, fmt17(a).c_str(), fmt17(b).c_str(), fmt17(p.lambda).c_str(),
                fmt17(p.mu).c_str(), fmt17(ratio).c_str(), fmt17(nu).c_str(),
                p.degenerate ? 1 : 0, fmt17(p.residual).c_str());
}

constexpr const char* kPointCsvHeader =
    "kind,chart,a_re,a_im,b_re,b_im,lambda_re,lambda_im,mu_re,mu_im,"
    "ratio_re,ratio_im,nu_re,nu_im,degenerate,residual";

// ---------------------------------------------------------------------------

int cmd_gen(const InputOpts& o, const std::string& out_path) {
    json out;
    if (o.count <= 1) {
        out = field_file_json(to_field_file(random_field(o.seed, o.degree),
                                            "random-" + std::to_string(o.seed), o.seed));
    } else {
        out = json::array();
        for (int k = 0; k < o.count; ++k) {
            const std::uint64_t s = o.seed + static_cast<std::uint64_t>(k);
            out.push_back(field_file_json(
                to_field_file(random_field(s, o.degree), "random-" + std::to_string(s), s)));
        }
    }
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw error(errc::parse_error, "cannot write " + out_path);
        f << out.dump(2) << "\n";
    } else {
        std::printf("%s\n", out.dump(2).c_str());
    }
    return 0;
}

int cmd_singular(Report& rep, const InputOpts& o) {
    const VectorField v = single_field(o);
    rep.input_digest = field_digest(v);
    const SingSet s = singular_points(v);
    if (o.csv) {
        std::printf("%s\n", kPointCsvHeader);
        for (const SingPoint* p : s.all()) point_csv_row(*p);
        return 0;
    }
    json& r = rep.results;
    r["degree"] = v.degree();
    r["count_finite"] = s.finite.size();
    r["count_infinite"] = s.infinite.size();
    r["count_total"] = s.finite.size() + s.infinite.size();
    r["expected_total"] = s.N;
    r["finite"] = json::array();
    for (const auto& p : s.finite) r["finite"].push_back(point_json(p));
    r["infinite"] = json::array();
    for (const auto& p : s.infinite) r["infinite"].push_back(point_json(p));
    rep.emit();
    return 0;
}

int cmd_indices(Report& rep, const InputOpts& o) {
    const VectorField v = single_field(o);
    rep.input_digest = field_digest(v);
    const SingSet s = singular_points(v);
    cplx sum_nu(0), sum_ratio_inf(0);
    for (const SingPoint* p : s.all()) {
        if (p->degenerate || !p->nu)
            throw error(errc::degenerate_singularity, "index sums undefined: degenerate point");
        sum_nu += *p->nu;
        if (p->at_infinity) sum_ratio_inf += *p->char_ratio;
    }
    const cplx target = baum_bott_target(v.degree());
    if (o.csv) {
        std::printf("%s\n", kPointCsvHeader);
        for (const SingPoint* p : s.all()) point_csv_row(*p);
        return 0;
    }
    json& r = rep.results;
    r["degree"] = v.degree();
    r["sum_nu"] = cval(sum_nu);
    r["target"] = cval(target);
    r["baum_bott_residual"] = std::abs(sum_nu - target);
    r["infinity_ratio_sum"] = cval(sum_ratio_inf);
    r["camacho_sad_residual"] = std::abs(sum_ratio_inf - cplx(1));
    r["points"] = json::array();
    for (const SingPoint* p : s.all()) r["points"].push_back(point_json(*p));
    rep.emit();
    return 0;
}

int cmd_verify(Report& rep, const InputOpts& o) {
    const bool batch = o.input.empty() && o.count > 1;
    rep.input_digest = o.input.empty() ? batch_digest(o) : "";
    json rows = json::array();
    double max_bb = 0, max_cs = 0;
    int evaluated = 0, rejected = 0;
    bool all_ok = true;

    std::vector<std::string> csv;
    for (int k = 0; k < (o.input.empty() ? o.count : 1); ++k) {
        const std::uint64_t s = o.seed + static_cast<std::uint64_t>(k);
        try {
            const VectorField v =
                o.input.empty() ? random_field(s, o.degree) : parse_field_file(o.input);
            if (!o.input.empty()) rep.input_digest = field_digest(v);
            const SingSet set = singular_points(v);
            const double bb = verify_baum_bott(v);
            const double cs = verify_camacho_sad_infinity(v);
            const bool ok = bb < o.tol && cs < o.tol;
            all_ok = all_ok && ok;
            max_bb = std::max(max_bb, bb);
            max_cs = std::max(max_cs, cs);
            ++evaluated;
            json row;
            row["seed"] = s;
            row["degree"] = v.degree();
            row["finite"] = set.finite.size();
            row["infinite"] = set.infinite.size();
            row["baum_bott_residual"] = bb;
            row["camacho_sad_residual"] = cs;
            row["ok"] = ok;
            rows.push_back(row);
            csv.push_back(std::to_string(s) + "," + std::to_string(v.degree()) + "," +
                          std::to_string(set.finite.size()) + "," +
                          std::to_string(set.infinite.size()) + "," + fmt17(bb) + "," +
                          fmt17(cs) + "," + (ok ? "1" : "0"));
        } catch (const error& e) {
            if (!batch) throw;
            ++rejected;
            json err;
            err["seed"] = s;
            err["code"] = e.code_name();
            err["detail"] = e.what();
            rep.errors.push_back(err);
        }
    }
    if (o.csv) {
        std::printf("seed,degree,finite,infinite,baum_bott_residual,camacho_sad_residual,ok\n");
        for (const auto& line : csv) std::printf("%s\n", line.c_str());
        return 0;
    }
    json& r = rep.results;
    r["rows"] = rows;
    r["fields"] = evaluated + rejected;
    r["evaluated"] = evaluated;
    r["rejected"] = rejected;
    r["max_baum_bott_residual"] = max_bb;
    r["max_camacho_sad_residual"] = max_cs;
    r["tol"] = o.tol;
    r["all_ok"] = all_ok;
    rep.emit();
    return 0;
}

int cmd_rank(Report& rep, const InputOpts& o) {
    const VectorField v = single_field(o);
    rep.input_digest = field_digest(v);
    const Regularization reg = to_regular_representative(v);
    const JacobianReport jac = moduli_jacobian(reg.rep);
    if (o.csv) {
        std::printf("rank,radial_residual,sigma1,sigma2,sigma3,sigma4,sigma5,sigma6\n");
        std::printf("%d,%s", jac.rank, fmt17(jac.radial_residual).c_str());
        for (double s : jac.singular_values) std::printf(",%s", fmt17(s).c_str());
        std::printf("\n");
        return 0;
    }
    json& r = rep.results;
    r["rep"] = {{"p", json::array({cval(reg.rep.p[0]), cval(reg.rep.p[1]), cval(reg.rep.p[2])})},
                {"q", json::array({cval(reg.rep.q[0]), cval(reg.rep.q[1]), cval(reg.rep.q[2])})},
                {"pin", reg.rep.pin}};
    r["singular_values"] = jac.singular_values;
    r["rank"] = jac.rank;
    r["radial_residual"] = jac.radial_residual;
    r["sigma5_over_sigma1"] =
        jac.singular_values[0] > 0 ? jac.singular_values[4] / jac.singular_values[0] : 0.0;
    rep.emit();
    return 0;
}

int cmd_darboux_scan(Report& rep, const std::string& alpha_s, const std::string& grid_s,
                     bool csv) {
    const cplx alpha = parse_complex(alpha_s);
    const std::vector<cplx> grid = parse_complex_list(grid_s);
    rep.input_digest = detail::fnv1a_hex("darboux alpha=" + alpha_s + " grid=" + grid_s);
    const DarbouxScan scan = darboux_family_scan(alpha, grid);
    if (csv) {
        std::printf(
            "k_re,k_im,ok,error,rank,sigma1,k_dir_pushed_rel,k_dir_direct_rel\n");
        for (const auto& m : scan.members)
            std::printf("%s,%d,%s,%d,%s,%s,%s\n", fmt17(m.k).c_str(), m.ok ? 1 : 0,
                        m.error_code.c_str(), m.jacobian_rank, fmt17(m.sigma1).c_str(),
                        fmt17(m.k_dir_pushed_rel).c_str(), fmt17(m.k_dir_direct_rel).c_str());
        return 0;
    }
    json& r = rep.results;
    r["alpha"] = cval(alpha);
    r["members"] = json::array();
    for (const auto& m : scan.members) {
        json row;
        row["k"] = cval(m.k);
        row["ok"] = m.ok;
        if (!m.ok) row["error"] = m.error_code;
        if (m.ok) {
            row["rank"] = m.jacobian_rank;
            row["sigma1"] = m.sigma1;
            row["k_dir_pushed_rel"] = m.k_dir_pushed_rel;
            row["k_dir_direct_rel"] = m.k_dir_direct_rel;
            row["canonical_infinite"] = json::array();
            for (const cplx& z : m.moduli.canonical_infinite)
                row["canonical_infinite"].push_back(cval(z));
            row["canonical_finite"] = json::array();
            for (const cplx& z : m.moduli.canonical_finite)
                row["canonical_finite"].push_back(cval(z));
        }
        r["members"].push_back(row);
    }
    r["max_matched_joint"] = scan.max_matched_joint;
    r["max_matched_split"] = scan.max_matched_split;
    rep.emit();
    return 0;
}

int cmd_fiber_search(Report& rep, const InputOpts& o, int restarts, double spread) {
    const VectorField v = single_field(o);
    rep.input_digest = field_digest(v);
    const RegularRep center = to_regular_representative(v).rep;
    const ModuliVector target = moduli_vector(from_regular(center));
    const FiberResult res = fiber_search(target, center, restarts, o.seed, o.tol, spread);
    if (o.csv) {
        std::printf("solution,matched_distance,p0,p1,p2,q0,q1,q2\n");
        for (size_t i = 0; i < res.solutions.size(); ++i) {
            std::printf("%zu,%s", i, fmt17(res.matched_distances[i]).c_str());
            for (int k = 0; k < 6; ++k)
                std::printf(",%s", fmt17(res.solutions[i].coeff(k)).c_str());
            std::printf("\n");
        }
        return 0;
    }
    json& r = rep.results;
    r["attempted"] = res.attempted;
    r["converged"] = res.converged;
    r["failed"] = res.failed;
    r["distinct_solutions"] = res.solutions.size();
    r["blow_down_suspected"] = res.blow_down_suspected;
    r["solutions"] = json::array();
    for (size_t i = 0; i < res.solutions.size(); ++i) {
        const RegularRep& s = res.solutions[i];
        json row;
        row["matched_distance"] = res.matched_distances[i];
        row["p"] = json::array({cval(s.p[0]), cval(s.p[1]), cval(s.p[2])});
        row["q"] = json::array({cval(s.q[0]), cval(s.q[1]), cval(s.q[2])});
        row["pin"] = s.pin;
        r["solutions"].push_back(row);
    }
    rep.emit();
    return 0;
}

int cmd_holonomy(Report& rep, const InputOpts& o) {
    const VectorField v = single_field(o);
    rep.input_digest = field_digest(v);
    const auto pts = infinite_singular_points(v);

    json points = json::array();
    std::vector<std::string> csv;
    for (size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].degenerate)
            throw error(errc::degenerate_singularity, "holonomy needs nondegenerate points");
        const cplx m = holonomy_multiplier(v, i);
        const cplx pred = std::exp(cplx(0, kTau) * *pts[i].char_ratio);
        const double err = std::abs(m - pred);
        json row;
        row["index"] = i;
        row["chart"] = pts[i].chart;
        row["v"] = cval(pts[i].vparam);
        row["ratio"] = cval(*pts[i].char_ratio);
        row["multiplier"] = cval(m);
        row["predicted"] = cval(pred);
        row["abs_error"] = err;
        row["ok"] = err < o.tol;
        points.push_back(row);
        csv.push_back(std::to_string(i) + "," + std::to_string(pts[i].chart) + "," +
                      fmt17(pts[i].vparam) + "," + fmt17(m) + "," + fmt17(pred) + "," +
                      fmt17(err));
    }
    const GeneratorSet gs = build_infinity_generators(v);
    const double prod =
        generator_product_check(v, gs.base, {cplx(1e-3), cplx(0, 1e-3)});
    json comms = json::array();
    for (size_t i = 0; i < gs.gens.size(); ++i)
        for (size_t j = i + 1; j < gs.gens.size(); ++j) {
            json c;
            c["i"] = i;
            c["j"] = j;
            c["u0"] = 1e-3;
            c["defect"] = commutator_probe(v, i, j, cplx(1e-3));
            comms.push_back(c);
        }
    if (o.csv) {
        std::printf("index,chart,v_re,v_im,mult_re,mult_im,pred_re,pred_im,abs_error\n");
        for (const auto& line : csv) std::printf("%s\n", line.c_str());
        return 0;
    }
    json& r = rep.results;
    r["points"] = points;
    r["generator_product"] = {{"chart", gs.chart},
                              {"base", cval(gs.base)},
                              {"residual", prod},
                              {"ok", prod < 1e-6}};
    r["commutators"] = comms;
    r["multiplier_tol"] = o.tol;
    rep.emit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singular-point invariants of polynomial fields on the projective plane"};
    app.require_subcommand(1);

    InputOpts o;
    std::string out_path, alpha_s, grid_s;
    int restarts = 8;
    double spread = 1e-3;
    bool scan_csv = false;

    CLI::App* gen = app.add_subcommand("gen", "write a seeded random field file");
    gen->add_option("--seed", o.seed, "generator seed");
    gen->add_option("--degree", o.degree, "field degree");
    gen->add_option("--count", o.count, "emit an array of this many fields");
    gen->add_option("--out", out_path, "output path (default: stdout)");

    CLI::App* sing = app.add_subcommand("singular", "list all singular points");
    add_input_opts(sing, o);
    CLI::App* ind = app.add_subcommand("indices", "characteristic ratios, indices, index sums");
    add_input_opts(ind, o);
    CLI::App* ver = app.add_subcommand("verify", "check the index-sum identities over a batch");
    add_input_opts(ver, o, true);
    CLI::App* rank = app.add_subcommand("rank", "moduli-map rank at the regular representative");
    add_input_opts(rank, o);
    CLI::App* dscan = app.add_subcommand("darboux-scan", "moduli along a blow-down family");
    dscan->add_option("--alpha", alpha_s, "family exponent, RE[,IM]")->required();
    dscan->add_option("--k-grid", grid_s, "semicolon-separated k values, each RE[,IM]")
        ->required();
    dscan->add_flag("--csv", scan_csv, "tabular output");
    CLI::App* fib = app.add_subcommand("fiber-search", "search the moduli fiber over a field");
    add_input_opts(fib, o);
    fib->add_option("--restarts", restarts, "number of perturbed starts");
    fib->add_option("--spread", spread, "relative size of start perturbations");
    CLI::App* hol = app.add_subcommand("holonomy", "multipliers and generator product at infinity");
    add_input_opts(hol, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int r = app.exit(e);
        return r == 0 ? 0 : 2;
    }
    if (hol->parsed() && hol->get_option("--tol")->count() == 0) o.tol = 1e-4;

    Report rep;
    for (int k = 1; k < argc; ++k) rep.command += std::string(k > 1 ? " " : "") + argv[k];

    try {
        if (gen->parsed()) return cmd_gen(o, out_path);
        if (sing->parsed()) return cmd_singular(rep, o);
        if (ind->parsed()) return cmd_indices(rep, o);
        if (ver->parsed()) return cmd_verify(rep, o);
        if (rank->parsed()) return cmd_rank(rep, o);
        if (dscan->parsed()) return cmd_darboux_scan(rep, alpha_s, grid_s, scan_csv);
        if (fib->parsed()) return cmd_fiber_search(rep, o, restarts, spread);
        if (hol->parsed()) return cmd_holonomy(rep, o);
    } catch (const error& e) {
        json err;
        err["code"] = e.code_name();
        err["detail"] = e.what();
        rep.errors.push_back(err);
        rep.emit();
        return errc_is_input_rejection(e.code()) ? 2 : 1;
    } catch (const std::invalid_argument& e) {
        json err;
        err["code"] = "InvalidArgument";
        err["detail"] = e.what();
        rep.errors.push_back(err);
        rep.emit();
        return 2;
    } catch (const std::exception& e) {
        json err;
        err["code"] = "InternalError";
        err["detail"] = e.what();
        rep.errors.push_back(err);
        rep.emit();
        return 1;
    }
    return 0;
}
