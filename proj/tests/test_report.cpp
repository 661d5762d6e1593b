#include <doctest.h>

#include <cmath>

#include "dicov/error.hpp"
#include "dicov/report.hpp"
#include "test_util.hpp"

using namespace dicov;

namespace {

VariableRecord make_var(const std::string& fn, const std::string& name, std::int64_t num,
                        std::int64_t den) {
    VariableRecord v;
    v.function = fn;
    v.name = name;
    v.decl = DeclRef{"main.c", 3};
    v.numerator = Rational::whole(num);
    v.denominator = Rational::whole(den);
    return v;
}

CoverageReport sample_report() {
    CoverageReport r;
    r.meta.input_path = "loopsum.dbgfx";
    r.meta.input_hash = "fnv1a64:0000000000000000";
    r.meta.source_root = ".";
    r.meta.metrics = {"accurate"};
    r.variables.push_back(make_var("f", "p", 5, 6));
    r.variables.push_back(make_var("f", "x", 4, 4));
    r.variables.push_back(make_var("f", "y", 4, 5));
    r.variables.push_back(make_var("f", "i", 2, 2));
    LineRecord l;
    l.file = "loopsum.c";
    l.line = 5;
    l.numerator = Rational::whole(3);
    l.denominator = Rational::whole(3);
    r.lines.push_back(l);
    ExcludedRecord e;
    e.function = "f";
    e.name = "dead";
    e.reason = "undefined-coverage";
    r.excluded.push_back(e);
    finalize_report(r);
    return r;
}

// Textbook formula on raw sums, kept deliberately different from the
// implementation's mean-centered accumulation.
double pearson_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        syy += ys[i] * ys[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

} // namespace

TEST_CASE("sorted curve: golden-example ratios in non-decreasing order") {
    CoverageReport r = sample_report();
    auto curve = sorted_curve(r);
    REQUIRE(curve.size() == 4);
    CHECK(curve[0].first == 0);
    CHECK(curve[0].second == doctest::Approx(0.8));
    CHECK(curve[1].second == doctest::Approx(5.0 / 6.0));
    CHECK(curve[2].second == doctest::Approx(1.0));
    CHECK(curve[3].second == doctest::Approx(1.0));
    for (size_t i = 1; i < curve.size(); ++i)
        CHECK(curve[i - 1].second <= curve[i].second);

    CoverageReport empty;
    finalize_report(empty);
    CHECK(sorted_curve(empty).empty());

    CoverageReport one;
    one.variables.push_back(make_var("f", "a", 1, 2));
    finalize_report(one);
    CHECK(sorted_curve(one).size() == 1);
}

TEST_CASE("report records are sorted by coverage, then function, then name") {
    CoverageReport r = sample_report();
    REQUIRE(r.variables.size() == 4);
    CHECK(r.variables[0].name == "y"); // 0.8
    CHECK(r.variables[1].name == "p"); // 0.8333
    CHECK(r.variables[2].name == "i"); // 1.0, 'i' < 'x'
    CHECK(r.variables[3].name == "x");
    CHECK(r.aggregate.variable_count == 4);
    CHECK(r.aggregate.fully_covered == 2);
    CHECK(r.aggregate.zero_covered == 0);
    // mean = (5/6 + 1 + 4/5 + 1)/4 = 109/120
    CHECK(r.aggregate.mean_ratio == Rational(109, 120));
}

TEST_CASE("report JSON round-trips byte-identically") {
    CoverageReport r = sample_report();
    r.variables[0].state = "NormalPLive";
    r.variables[1].unshrunk = MetricValue{Rational::whole(3), Rational::whole(6)};
    std::string one = report_to_json(r);
    CoverageReport parsed = report_from_json(one, "mem");
    std::string two = report_to_json(parsed);
    CHECK(one == two);
    CHECK(parsed.variables.size() == 4);
    CHECK(parsed.variables[0].numerator == Rational::whole(4));
    CHECK(parsed.variables[0].state == "NormalPLive");
    REQUIRE(parsed.variables[1].unshrunk.has_value());
    CHECK(parsed.variables[1].unshrunk->numerator == Rational::whole(3));
    CHECK(parsed.excluded.size() == 1);
    CHECK(parsed.lines.size() == 1);
}

TEST_CASE("report parsing validates the aggregate block") {
    CoverageReport r = sample_report();
    std::string text = report_to_json(r);
    auto pos = text.find("\"fully_covered\": 2");
    REQUIRE(pos != std::string::npos);
    std::string tampered = text;
    tampered.replace(pos, 18, "\"fully_covered\": 3");
    CHECK_THROWS_WITH_AS(report_from_json(tampered, "mem"), doctest::Contains("aggregate"),
                         Error);

    CHECK_THROWS_AS(report_from_json("{ not json", "mem"), Error);
    CHECK_THROWS_AS(report_from_json("{}", "mem"), Error);
}

TEST_CASE("report CSV emission") {
    CoverageReport r = sample_report();
    std::string csv = report_to_csv(r);
    CHECK(csv.find("index,ratio\n") == 0);
    CHECK(csv.find("0,0.800000\n") != std::string::npos);
    CHECK(csv.find("1,0.833333\n") != std::string::npos);
    CHECK(csv.find("3,1.000000\n") != std::string::npos);

    CoverageReport lr = sample_report();
    lr.meta.mode = "line";
    std::string line_csv = report_to_csv(lr);
    CHECK(line_csv.find("file,line,numerator,denominator\n") == 0);
    CHECK(line_csv.find("\"loopsum.c\",5,3.000000,3\n") != std::string::npos);
}

TEST_CASE("pearson: exact values on affine inputs") {
    std::vector<double> xs = {1, 2, 3, 4, 5};
    std::vector<double> same = xs;
    CHECK(pearson(xs, same) == 1.0);
    std::vector<double> neg = {-1, -2, -3, -4, -5};
    CHECK(pearson(xs, neg) == -1.0);
    std::vector<double> affine;
    for (double x : xs)
        affine.push_back(2.0 * x + 1.0);
    CHECK(pearson(xs, affine) == 1.0);
    std::vector<double> down;
    for (double x : xs)
        down.push_back(-0.5 * x + 3.0);
    CHECK(pearson(xs, down) == -1.0);
}

TEST_CASE("pearson: matches the textbook oracle") {
    std::vector<double> xs = {1, 2, 3, 4};
    std::vector<double> ys = {2, 4, 5, 9};
    CHECK(std::abs(pearson(xs, ys) - pearson_oracle(xs, ys)) < 1e-12);

    for (int iter = 0; iter < 100; ++iter) {
        size_t n = testutil::rand_int(3, 40);
        std::vector<double> as, bs;
        for (size_t i = 0; i < n; ++i) {
            as.push_back(static_cast<double>(testutil::rand_int(0, 1000)) / 16.0);
            bs.push_back(static_cast<double>(testutil::rand_int(0, 1000)) / 16.0);
        }
        bool a_const = std::all_of(as.begin(), as.end(), [&](double v) { return v == as[0]; });
        bool b_const = std::all_of(bs.begin(), bs.end(), [&](double v) { return v == bs[0]; });
        if (a_const || b_const)
            continue;
        double got = pearson(as, bs);
        double want = pearson_oracle(as, bs);
        CHECK(std::abs(got - want) < 1e-12);
        CHECK(got >= -1.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("pearson: error cases") {
    std::vector<double> xs = {1, 2, 3};
    std::vector<double> short_ys = {1, 2};
    CHECK_THROWS_AS(pearson(xs, short_ys), Error);
    std::vector<double> flat = {4, 4, 4};
    CHECK_THROWS_WITH_AS(pearson(xs, flat), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_AS(pearson(flat, xs), Error);
    CHECK_THROWS_AS(pearson({}, {}), Error);
}

TEST_CASE("compare: identical reports have zero deltas") {
    CoverageReport r = sample_report();
    Comparison cmp = compare_reports(r, r);
    CHECK(cmp.improved == 0);
    CHECK(cmp.regressed == 0);
    CHECK(cmp.unchanged == 4);
    for (const auto& d : cmp.matched)
        CHECK(d.delta == Rational());
    CHECK(cmp.only_before.empty());
    CHECK(cmp.only_after.empty());
}

TEST_CASE("compare: improvements and regressions are counted") {
    CoverageReport before = sample_report();
    CoverageReport after = sample_report();
    // Raise y from 0 to full: the repaired-debug-info pattern.
    for (auto& v : before.variables)
        if (v.name == "y")
            v.numerator = Rational();
    finalize_report(before);
    Comparison up = compare_reports(before, after);
    CHECK(up.improved == 1);
    CHECK(up.regressed == 0);

    // Drop x to zero: the dropped-debug-info pattern.
    CoverageReport dropped = sample_report();
    for (auto& v : dropped.variables)
        if (v.name == "x")
            v.numerator = Rational();
    finalize_report(dropped);
    Comparison down = compare_reports(after, dropped);
    CHECK(down.regressed == 1);
    CHECK(down.improved == 0);

    // A variable present on one side only is flagged, not matched.
    CoverageReport extra = sample_report();
    extra.variables.push_back(make_var("f", "fresh", 1, 2));
    finalize_report(extra);
    Comparison added = compare_reports(after, extra);
    CHECK(added.only_after.size() == 1);
    CHECK(added.only_before.empty());
}

TEST_CASE("compare: mode mismatch and empty matches are errors") {
    CoverageReport a = sample_report();
    CoverageReport b = sample_report();
    b.meta.mode = "line";
    CHECK_THROWS_WITH_AS(compare_reports(a, b), doctest::Contains("mode"), Error);

    CoverageReport other;
    other.variables.push_back(make_var("g", "q", 1, 2));
    finalize_report(other);
    CHECK_THROWS_WITH_AS(compare_reports(a, other), doctest::Contains("no variables matched"),
                         Error);
}

TEST_CASE("comparison serialization is stable") {
    CoverageReport r = sample_report();
    Comparison cmp = compare_reports(r, r);
    std::string s1 = comparison_to_json(cmp);
    std::string s2 = comparison_to_json(cmp);
    CHECK(s1 == s2);
    CHECK(s1.find("\"improved\": 0") != std::string::npos);
    CHECK(s1.find("\"unchanged\": 4") != std::string::npos);
}
