#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bmsprt/errors.hpp"
#include "bmsprt/io.hpp"
#include "support.hpp"

using namespace bmsprt;
namespace fs = std::filesystem;

namespace {

std::vector<SessionRecord> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
}

std::size_t malformed_line(const std::string& text) {
    try {
        parse(text);
    } catch (const MalformedRow& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_SUITE("io") {
    TEST_CASE("header-only file") { CHECK(parse("ts,queries,successful_queries,revenue\n").empty()); }

    TEST_CASE("row mapping") {
        const auto recs = parse("ts,queries,successful_queries,revenue\n1000,3,2,5.50\n");
        REQUIRE(recs.size() == 1);
        CHECK(recs[0] == SessionRecord{1000, 3, 2, 5.5});
    }

    TEST_CASE("line endings and blank lines") {
        const auto recs = parse("ts,queries,successful_queries,revenue\r\n1,1,0,0\r\n\r\n2,2,1,0.25\r\n");
        REQUIRE(recs.size() == 2);
        CHECK(recs[1] == SessionRecord{2, 2, 1, 0.25});
    }

    TEST_CASE("malformed rows carry their line number") {
        const std::string h = "ts,queries,successful_queries,revenue\n";
        CHECK(malformed_line(h + "1,3,2,0\n2,2,3,0\n") == 3);
        CHECK(malformed_line(h + "1,3,2\n") == 2);
        CHECK(malformed_line(h + "1,3,2,-1\n") == 2);
        CHECK(malformed_line(h + "1,x,2,0\n") == 2);
        CHECK(malformed_line(h + "1,3,2,0,9\n") == 2);
        CHECK(malformed_line(h + "1,-3,0,0\n") == 2);
        CHECK(malformed_line(h + "1,3,2,nan\n") == 2);
    }

    TEST_CASE("missing header") {
        CHECK_THROWS_AS(parse("1000,3,2,5.50\n"), MissingHeader);
        CHECK_THROWS_AS(parse(""), MissingHeader);
        CHECK_THROWS_AS(parse_csv(fs::path("/nonexistent/sessions.csv")), DataError);
    }

    TEST_CASE("CSV round trip is exact") {
        SyntheticConfig cfg;
        cfg.n_sessions = 2000;
        cfg.model = ZeroInflatedRevenue{};
        cfg.seed = 3;
        auto recs = generate_sessions(cfg);
        const auto more = testing::correlated(2000, 4);
        recs.insert(recs.end(), more.begin(), more.end());
        CHECK(parse(sessions_csv(recs)) == recs);
    }

    TEST_CASE("number formatting") {
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(1e-300) == "1e-300");
        CHECK(format_double(std::nan("")) == "nan");
        CHECK(format_double(-INFINITY) == "-inf");
        CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
    }

    TEST_CASE("update records as JSON") {
        UpdateRecord u;
        u.block_index = 3;
        u.theta_hat = 0.25;
        u.sigma = 0.5;
        u.log_L = 1.5;
        u.p_value = 0.2;
        const auto j = to_json(u);
        for (const char* key : {"block_index", "theta_hat", "sigma", "log_L", "p_value", "decision"}) CHECK(j.contains(key));
        CHECK(j["decision"] == "Continue");
        CHECK(j["theta_hat"] == 0.25);

        AbUpdateRecord skipped;
        skipped.update.block_index = 4;
        skipped.offset = 0.1;
        const auto k = to_json(skipped);
        CHECK(k["theta_hat"].is_null());
        CHECK(k["metric_a"].is_null());
        CHECK(k["offset"] == 0.1);
    }

    TEST_CASE("result tables") {
        const std::vector<QqPoint> qq{{0.25, 0.5}, {0.75, 1.0}};
        CHECK(qq_csv(qq) == "uniform_q,empirical_q\n0.25,0.5\n0.75,1\n");
        const std::vector<PowerPoint> pw{{0.01, 0.5, 200, 1234.5}};
        CHECK(power_csv(pw) == "offset,rejection_rate,n_trials\n0.01,0.5,200\n");
        CHECK(duration_csv(pw) == "offset,avg_duration\n0.01,1234.5\n");
    }

    TEST_CASE("atomic writes replace the target") {
        const fs::path dir = fs::temp_directory_path() / "bmsprt_io_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
        write_file_atomic(dir / "a.txt", "one");
        write_file_atomic(dir / "a.txt", "two");
        std::ifstream in(dir / "a.txt");
        std::string s;
        std::getline(in, s);
        CHECK(s == "two");
        std::size_t files = 0;
        for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
        CHECK(files == 1);
        fs::remove_all(dir);
    }
}
