#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "qec/analysis.h"
#include "util.h"

using namespace qec;

namespace {

size_t count_of(const std::string& hay, const std::string& needle) {
    size_t n = 0;
    for (size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size())) {
        ++n;
    }
    return n;
}

CellPoint make_point(ExperimentKind kind, Basis basis, uint32_t d, uint32_t r,
                     double pu, double pm, uint64_t shots, uint64_t errors) {
    CellPoint pt;
    pt.spec = {kind, basis, d, r};
    pt.pu = pu;
    pt.pm = pm;
    pt.shots = shots;
    pt.errors = errors;
    pt.region = bayes_region(errors, shots);
    return pt;
}

}  // namespace

TEST_CASE("exact halving per distance step is 3.0103 dB") {
    // p_L = 0.1 * 2^-(d-3): every unit of distance halves the rate.
    std::vector<RatePoint> pts{
        {3, 1000000, 100000},
        {5, 1000000, 25000},
        {7, 1000000, 6250},
    };
    FitResult fit = fit_suppression(pts);
    CHECK(fit.suppression_db ==
          doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-9));
    CHECK(fit.suppression_db == doctest::Approx(3.0103).epsilon(1e-4));
    // Intercept recovers the prefactor: log10(p_L) at d = 0.
    CHECK(std::pow(10.0, fit.intercept + 3.0 * fit.slope) ==
          doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("flat rates fit zero suppression") {
    std::vector<RatePoint> pts{{5, 1000, 41}, {15, 1000, 41}, {25, 1000, 41}};
    FitResult fit = fit_suppression(pts);
    CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.suppression_db == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("half a decibel per round") {
    // p_L = 0.2 * 10^(-0.05 r); huge shot counts keep the integer rounding
    // of the error tallies far below the checked tolerance.
    const uint64_t shots = 1000000000000000ull;
    std::vector<RatePoint> pts;
    for (int r : {5, 15, 25}) {
        double rate = 0.2 * std::pow(10.0, -0.05 * r);
        pts.push_back({r, shots,
                       static_cast<uint64_t>(std::llround(
                           rate * static_cast<double>(shots)))});
    }
    FitResult fit = fit_suppression(pts);
    CHECK(fit.suppression_db == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("fits demand usable points") {
    CHECK(contains(error_of([] { fit_suppression({{3, 1000, 10}}); }),
                   "at least two points"));
    CHECK(contains(error_of([] {
                       fit_suppression({{3, 1000, 10}, {3, 1000, 20}});
                   }),
                   "distinct code distances"));
    CHECK(contains(error_of([] {
                       fit_suppression({{3, 1000, 10}, {5, 0, 0}});
                   }),
                   "no shots"));
    CHECK(error_of([] {
              fit_suppression({{3, 1000, 10}, {5, 1000, 0}});
          }) == "insufficient errors; increase shots");
}

TEST_CASE("zero-error likelihood region") {
    BayesRegion r = bayes_region(0, 1000, 1000.0);
    CHECK(r.lo == 0.0);
    // (1-p)^1000 >= 1/1000 exactly when p <= 1 - 1000^(-1/1000).
    CHECK(r.hi ==
          doctest::Approx(1.0 - std::pow(1000.0, -0.001)).epsilon(1e-9));
    CHECK(r.hi == doctest::Approx(0.0068838).epsilon(1e-4));
}

TEST_CASE("all-error likelihood region mirrors the zero-error one") {
    BayesRegion r = bayes_region(1000, 1000, 1000.0);
    CHECK(r.hi == 1.0);
    CHECK(r.lo == doctest::Approx(std::pow(1000.0, -0.001)).epsilon(1e-9));
}

TEST_CASE("interior regions bracket the observed rate") {
    BayesRegion r = bayes_region(50, 1000);
    CHECK(r.lo < 0.05);
    CHECK(r.hi > 0.05);
    // Frozen endpoints, verified against the dense scan below. Note the
    // skew: the exact region pokes just below 0.03 and stops just shy of
    // 0.08, so eyeballed round-number brackets are off at the edges.
    CHECK(r.lo == doctest::Approx(0.02842).epsilon(1e-3));
    CHECK(r.hi == doctest::Approx(0.07986).epsilon(1e-3));

    // Dense-grid scan of the likelihood ratio as an independent oracle for
    // the bisection: the region is every rate whose log-likelihood stays
    // within ln(1000) of the maximum at k/n.
    auto ll = [](double p) {
        return 50.0 * std::log(p) + 950.0 * std::log1p(-p);
    };
    const double target = ll(0.05) - std::log(1000.0);
    double scan_lo = 1.0;
    double scan_hi = 0.0;
    for (double p = 1e-6; p < 0.2; p += 1e-6) {
        if (ll(p) >= target) {
            scan_lo = std::min(scan_lo, p);
            scan_hi = std::max(scan_hi, p);
        }
    }
    CHECK(r.lo == doctest::Approx(scan_lo).epsilon(1e-4));
    CHECK(r.hi == doctest::Approx(scan_hi).epsilon(1e-4));

    for (uint64_t k : {1ull, 7ull, 300ull, 999ull}) {
        BayesRegion q = bayes_region(k, 1000, 100.0);
        double mle = static_cast<double>(k) / 1000.0;
        CHECK(q.lo <= mle);
        CHECK(q.hi >= mle);
        CHECK(q.lo < q.hi);
    }
}

TEST_CASE("region width tracks the likelihood bound and the shot count") {
    double w100 = bayes_region(50, 1000, 100.0).hi - bayes_region(50, 1000, 100.0).lo;
    double w1k = bayes_region(50, 1000, 1000.0).hi - bayes_region(50, 1000, 1000.0).lo;
    double w10k = bayes_region(50, 1000, 10000.0).hi - bayes_region(50, 1000, 10000.0).lo;
    CHECK(w100 < w1k);
    CHECK(w1k < w10k);

    // Same rate, ten times the statistics: the region tightens.
    double wbig = bayes_region(500, 10000).hi - bayes_region(500, 10000).lo;
    CHECK(wbig < w1k);

    // As the bound approaches 1 the region collapses onto the MLE.
    BayesRegion tight = bayes_region(50, 1000, 1.0001);
    CHECK(tight.hi - tight.lo < 1e-3);
    CHECK(tight.lo <= 0.05);
    CHECK(tight.hi >= 0.05);
}

TEST_CASE("likelihood region input validation") {
    CHECK(contains(error_of([] { bayes_region(0, 0); }), "n >= 1"));
    CHECK(contains(error_of([] { bayes_region(5, 4); }), "k <= n"));
    CHECK(contains(error_of([] { bayes_region(1, 10, 1.0); }), "bound > 1"));
}

TEST_CASE("csv round trip") {
    std::vector<CellPoint> pts{
        make_point(ExperimentKind::Stability, Basis::Z, 4, 25, 0.001, 0.001,
                   2000000, 17),
        make_point(ExperimentKind::Memory, Basis::X, 3, 2, 0.02, 0.01, 50000,
                   1234),
        make_point(ExperimentKind::Stability, Basis::X, 2, 5, 0.0125, 0.0125,
                   10000, 0),
    };
    std::ostringstream out;
    emit_csv(pts, out);
    std::string text = out.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "type,basis,d,rounds,pu,pm,shots,errors,p_logical,region_lo,"
          "region_hi");
    CHECK(count_of(text, "\n") == 4);
    CHECK(contains(text, "stability,Z,4,25,0.001,0.001,2000000,17,"));
    CHECK(contains(text, "memory,X,3,2,0.02,0.01,50000,1234,"));

    std::istringstream in(text);
    std::vector<CellPoint> back = read_csv(in);
    REQUIRE(back.size() == pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        CHECK(back[i].spec.kind == pts[i].spec.kind);
        CHECK(back[i].spec.basis == pts[i].spec.basis);
        CHECK(back[i].spec.diameter == pts[i].spec.diameter);
        CHECK(back[i].spec.rounds == pts[i].spec.rounds);
        // Doubles are printed shortest-round-trip, so equality is exact.
        CHECK(back[i].pu == pts[i].pu);
        CHECK(back[i].pm == pts[i].pm);
        CHECK(back[i].shots == pts[i].shots);
        CHECK(back[i].errors == pts[i].errors);
        CHECK(back[i].region.lo == pts[i].region.lo);
        CHECK(back[i].region.hi == pts[i].region.hi);
    }
}

TEST_CASE("csv rejects malformed input") {
    auto read_err = [](const std::string& text) {
        std::istringstream in(text);
        return error_of([&] { read_csv(in); });
    };
    CHECK(contains(read_err(""), "empty input"));
    CHECK(contains(read_err("shots,errors\n"), "unexpected header"));
    std::string hdr =
        "type,basis,d,rounds,pu,pm,shots,errors,p_logical,region_lo,"
        "region_hi\n";
    CHECK(contains(read_err(hdr + "stability,Z,4\n"), "expected 11 fields"));
    CHECK(contains(read_err(hdr + "stability,Z,4\n"), "line 2"));
    CHECK(contains(read_err(hdr + "teleport,Z,4,25,0,0,1,0,0,0,1\n"),
                   "unknown type"));
    CHECK(contains(read_err(hdr + "stability,Y,4,25,0,0,1,0,0,0,1\n"),
                   "unknown basis"));
    CHECK(contains(read_err(hdr + "stability,Z,4,25,0,0,many,0,0,0,1\n"),
                   "bad shots"));
    // Blank lines are tolerated; the error names the right line.
    CHECK(contains(read_err(hdr + "\nstability,Z,4,bad,0,0,1,0,0,0,1\n"),
                   "line 3"));
}

TEST_CASE("svg structure") {
    std::vector<CellPoint> pts{
        make_point(ExperimentKind::Stability, Basis::Z, 4, 5, 0.001, 0.001,
                   100000, 121),
        make_point(ExperimentKind::Stability, Basis::Z, 4, 5, 0.003, 0.003,
                   100000, 905),
        make_point(ExperimentKind::Stability, Basis::Z, 4, 5, 0.01, 0.01,
                   100000, 4731),
    };
    std::ostringstream out;
    emit_svg(pts, out);
    std::string svg = out.str();
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
    // One marker per point, one polyline and one region band per group.
    CHECK(count_of(svg, "<circle") == 3);
    CHECK(count_of(svg, "<polyline") == 1);
    CHECK(count_of(svg, "<polygon") == 1);

    // A second group doubles the lines, not the markers per point.
    pts.push_back(make_point(ExperimentKind::Memory, Basis::Z, 3, 2, 0.001,
                             0.001, 100000, 52));
    pts.push_back(make_point(ExperimentKind::Memory, Basis::Z, 3, 2, 0.01,
                             0.01, 100000, 3419));
    std::ostringstream out2;
    emit_svg(pts, out2);
    std::string svg2 = out2.str();
    CHECK(count_of(svg2, "<circle") == 5);
    CHECK(count_of(svg2, "<polyline") == 2);

    CHECK(contains(error_of([] {
                       std::ostringstream o;
                       emit_svg({}, o);
                   }),
                   "at least one point"));
}

TEST_CASE("zero-error points plot at their region ceiling") {
    std::vector<CellPoint> pts{
        make_point(ExperimentKind::Stability, Basis::Z, 2, 2, 0.001, 0.001,
                   1000, 0),
        make_point(ExperimentKind::Stability, Basis::Z, 2, 2, 0.01, 0.01, 1000,
                   30),
    };
    std::ostringstream out;
    emit_svg(pts, out);
    // It renders (no log-of-zero blowup) and still carries both markers.
    CHECK(count_of(out.str(), "<circle") == 2);
}

TEST_CASE("one point end to end") {
    ExperimentSpec spec{ExperimentKind::Stability, Basis::Z, 2, 2};
    CellPoint pt = run_point(spec, 0.02, 0.02, 4000, 99);
    CHECK(pt.shots == 4000);
    CHECK(pt.errors > 0);           // p = 0.02 on a tiny patch misses plenty
    CHECK(pt.errors < pt.shots / 2);  // but decoding beats coin flipping
    CHECK(pt.region.lo < pt.p_logical());
    CHECK(pt.region.hi > pt.p_logical());
    CHECK(pt.code_distance() == 2);

    CellPoint quiet = run_point(spec, 0.0, 0.0, 1000, 99);
    CHECK(quiet.errors == 0);
    CHECK(quiet.region.lo == 0.0);
}

TEST_CASE("slab size never changes the tally") {
    ExperimentSpec spec{ExperimentKind::Stability, Basis::Z, 2, 3};
    RunOptions small;
    small.slab_shots = 32;
    RunOptions large;
    large.slab_shots = 4096;
    CellPoint a = run_point(spec, 0.02, 0.01, 3000, 7, small);
    CellPoint b = run_point(spec, 0.02, 0.01, 3000, 7, large);
    CHECK(a.errors == b.errors);
    CHECK(a.region.lo == b.region.lo);
    CHECK(a.region.hi == b.region.hi);
}

TEST_CASE("precomputed distances do not change the tally") {
    ExperimentSpec spec{ExperimentKind::Memory, Basis::Z, 3, 2};
    RunOptions plain;
    RunOptions apsp;
    apsp.use_apsp = true;
    CellPoint a = run_point(spec, 0.02, 0.01, 2000, 21, plain);
    CellPoint b = run_point(spec, 0.02, 0.01, 2000, 21, apsp);
    CHECK(a.errors == b.errors);
}

TEST_CASE("run_point input validation") {
    ExperimentSpec spec{ExperimentKind::Stability, Basis::Z, 2, 2};
    CHECK(contains(error_of([&] { run_point(spec, 0.01, 0.01, 0, 1); }),
                   "shots > 0"));
    RunOptions opt;
    opt.slab_shots = 0;
    CHECK(contains(
        error_of([&] { run_point(spec, 0.01, 0.01, 10, 1, opt); }), "slab"));
}

TEST_CASE("sweeps censor quiet cells and fit noisy ones") {
    std::vector<ExperimentSpec> specs{
        {ExperimentKind::Stability, Basis::Z, 2, 2},
        {ExperimentKind::Stability, Basis::Z, 2, 4},
    };
    SweepTable t = sweep({{0.0, 0.0}, {0.03, 0.03}}, specs, 2000, 5);
    REQUIRE(t.cells.size() == 2);
    REQUIRE(t.cells[0].points.size() == 2);

    const SweepCell& quiet = t.cells[0];
    CHECK(quiet.censored);
    CHECK(quiet.points[0].errors == 0);
    CHECK(quiet.points[1].errors == 0);

    const SweepCell& noisy = t.cells[1];
    CHECK(noisy.pu == 0.03);
    CHECK(!noisy.censored);
    CHECK(noisy.points[0].errors > 0);
    // The fit matches one recomputed from the tallies by hand.
    FitResult manual = fit_suppression(
        {{noisy.points[0].code_distance(), noisy.points[0].shots,
          noisy.points[0].errors},
         {noisy.points[1].code_distance(), noisy.points[1].shots,
          noisy.points[1].errors}});
    CHECK(noisy.fit.slope == manual.slope);
    CHECK(noisy.fit.suppression_db == manual.suppression_db);
}

TEST_CASE("sweep cells do not depend on the rest of the grid") {
    std::vector<ExperimentSpec> specs{{ExperimentKind::Stability, Basis::Z, 2, 2}};
    SweepTable lone = sweep({{0.02, 0.02}}, specs, 1500, 11);
    SweepTable both = sweep({{0.02, 0.02}, {0.05, 0.05}}, specs, 1500, 11);
    CHECK(lone.cells[0].points[0].errors == both.cells[0].points[0].errors);

    SweepTable again = sweep({{0.02, 0.02}, {0.05, 0.05}}, specs, 1500, 11);
    REQUIRE(again.cells.size() == 2);
    CHECK(again.cells[1].points[0].errors == both.cells[1].points[0].errors);

    CHECK(contains(error_of([&] { sweep({}, specs, 10, 1); }), "grid"));
    CHECK(contains(error_of([&] { sweep({{0.1, 0.1}}, {}, 10, 1); }),
                   "specs"));
}

TEST_CASE("grouping keys on configuration, not distance") {
    std::vector<CellPoint> pts{
        make_point(ExperimentKind::Stability, Basis::Z, 4, 5, 0.01, 0.01,
                   100000, 9000),
        make_point(ExperimentKind::Stability, Basis::Z, 4, 15, 0.01, 0.01,
                   100000, 700),
        make_point(ExperimentKind::Stability, Basis::Z, 4, 25, 0.01, 0.01,
                   100000, 60),
        make_point(ExperimentKind::Memory, Basis::Z, 3, 2, 0.01, 0.01, 100000,
                   4000),
        make_point(ExperimentKind::Stability, Basis::Z, 4, 5, 0.02, 0.02,
                   100000, 20000),
    };
    std::vector<GroupFit> groups = fit_groups(pts);
    REQUIRE(groups.size() == 3);

    CHECK(groups[0].kind == ExperimentKind::Stability);
    CHECK(groups[0].pu == 0.01);
    CHECK(groups[0].points.size() == 3);
    CHECK(!groups[0].censored);
    // Rounds play the role of distance for stability configurations.
    FitResult manual = fit_suppression(
        {{5, 100000, 9000}, {15, 100000, 700}, {25, 100000, 60}});
    CHECK(groups[0].fit.suppression_db == manual.suppression_db);

    CHECK(groups[1].kind == ExperimentKind::Memory);
    CHECK(groups[1].points.size() == 1);
    CHECK(groups[1].censored);  // one point cannot anchor a slope

    CHECK(groups[2].pu == 0.02);
    CHECK(groups[2].points.size() == 1);
}
