#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "conauth/dataset.hpp"
#include "conauth/rng.hpp"

using namespace conauth;

namespace {

Session make_session(const std::string& id, const std::string& uid, double start) {
    Session s;
    s.session_id = id;
    s.user_id = uid;
    s.start_t = start;
    s.end_t = start + 100;
    s.day_index = day_index_of(start);
    return s;
}

}  // namespace

TEST_CASE("load_dataset groups and sorts sessions") {
    std::istringstream in(
        R"({"session_id":"b","user_id":"u1","start_t":2000,"end_t":2100})"
        "\n"
        R"({"session_id":"a","user_id":"u1","start_t":1000,"end_t":1100,"extra_field":42})"
        "\n");
    const auto ds = load_dataset(in);
    REQUIRE(ds.users.size() == 1);
    REQUIRE(ds.users.at("u1").size() == 2);
    CHECK(ds.users.at("u1")[0].session_id == "a");  // sorted by start_t
    CHECK(ds.users.at("u1")[1].session_id == "b");
}

TEST_CASE("load_dataset empty file") {
    std::istringstream in("");
    CHECK(load_dataset(in).users.empty());
}

TEST_CASE("load_dataset reports the offending line") {
    SECTION("missing user_id") {
        std::istringstream in(R"({"session_id":"a","start_t":1,"end_t":2})" "\n");
        REQUIRE_THROWS_WITH(load_dataset(in), Catch::Matchers::ContainsSubstring("line 1"));
    }
    SECTION("malformed json on line 2") {
        std::istringstream in(
            R"({"session_id":"a","user_id":"u","start_t":1,"end_t":2})"
            "\n{not json\n");
        REQUIRE_THROWS_WITH(load_dataset(in), Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("duplicate session id per user") {
        std::istringstream in(
            R"({"session_id":"a","user_id":"u","start_t":1,"end_t":2})"
            "\n"
            R"({"session_id":"a","user_id":"u","start_t":3,"end_t":4})"
            "\n");
        REQUIRE_THROWS_WITH(load_dataset(in), Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("end before start") {
        std::istringstream in(R"({"session_id":"a","user_id":"u","start_t":5,"end_t":2})" "\n");
        REQUIRE_THROWS_AS(load_dataset(in), std::runtime_error);
    }
}

TEST_CASE("load_dataset quantizes gps to event ids") {
    std::istringstream in(
        R"({"session_id":"a","user_id":"u","start_t":1,"end_t":2,)"
        R"("gps":[{"lat":40.446,"lon":-3.724,"timestamp":1.5}]})"
        "\n");
    const auto ds = load_dataset(in);
    REQUIRE(ds.users.at("u")[0].gps.size() == 1);
    CHECK(ds.users.at("u")[0].gps[0].event_id == "40.45,-3.72");
}

TEST_CASE("gps quantization rounds half away from zero") {
    CHECK(gps_event_id(0.125, -0.125) == "0.13,-0.13");
    CHECK(gps_event_id(40.0, -3.0) == "40.00,-3.00");
    CHECK(gps_event_id(-0.004, 0.004) == "-0.00,0.00");
}

TEST_CASE("split_by_days follows the ceiling rule") {
    Dataset ds;
    SECTION("10 days at 0.6 -> 6 train, 4 test") {
        for (int d = 0; d < 10; ++d)
            ds.users["u"].push_back(make_session("s" + std::to_string(d), "u", d * 86400.0 + 10));
        const auto split = split_by_days(ds, 0.6);
        REQUIRE(split.skipped.empty());
        CHECK(split.train.users.at("u").size() == 6);
        CHECK(split.test.users.at("u").size() == 4);
    }
    SECTION("5 days at 0.6 -> ceil(3.0) = 3 train, 2 test") {
        for (int d = 0; d < 5; ++d)
            ds.users["u"].push_back(make_session("s" + std::to_string(d), "u", d * 86400.0 + 10));
        const auto split = split_by_days(ds, 0.6);
        CHECK(split.train.users.at("u").size() == 3);
        CHECK(split.test.users.at("u").size() == 2);
    }
    SECTION("single day user is excluded with a reason") {
        ds.users["u"].push_back(make_session("s0", "u", 10));
        ds.users["u"].push_back(make_session("s1", "u", 20));
        const auto split = split_by_days(ds, 0.6);
        REQUIRE(split.skipped.size() == 1);
        CHECK(split.skipped[0].user_id == "u");
        CHECK(split.train.users.empty());
        CHECK(split.test.users.empty());
    }
    SECTION("fraction that consumes every day excludes the user") {
        ds.users["u"].push_back(make_session("s0", "u", 10));
        ds.users["u"].push_back(make_session("s1", "u", 86400.0 + 10));
        const auto split = split_by_days(ds, 0.9);  // ceil(1.8) = 2 of 2 days
        REQUIRE(split.skipped.size() == 1);
    }
    SECTION("invalid fraction") {
        REQUIRE_THROWS_AS(split_by_days(ds, 0.0), std::invalid_argument);
        REQUIRE_THROWS_AS(split_by_days(ds, 1.0), std::invalid_argument);
    }
}

TEST_CASE("split_by_days is a temporal partition", "[property]") {
    RngStream rng(7, "test/split-partition");
    for (int trial = 0; trial < 50; ++trial) {
        Dataset ds;
        const int n_users = 1 + static_cast<int>(rng.uniform_int(0, 3));
        for (int u = 0; u < n_users; ++u) {
            const std::string uid = "u" + std::to_string(u);
            const int days = 1 + static_cast<int>(rng.uniform_int(0, 11));
            int sid = 0;
            for (int d = 0; d < days; ++d) {
                const int per_day = 1 + static_cast<int>(rng.uniform_int(0, 2));
                for (int k = 0; k < per_day; ++k) {
                    ds.users[uid].push_back(make_session(
                        uid + "_s" + std::to_string(sid++), uid,
                        d * 86400.0 + rng.uniform(0.0, 86000.0)));
                }
            }
            std::sort(ds.users[uid].begin(), ds.users[uid].end(),
                      [](const Session& a, const Session& b) { return a.start_t < b.start_t; });
        }
        const double fraction = rng.uniform(0.1, 0.9);
        const auto split = split_by_days(ds, fraction);
        for (const auto& [uid, sessions] : ds.users) {
            const bool skipped =
                std::any_of(split.skipped.begin(), split.skipped.end(),
                            [&](const SkipRecord& r) { return r.user_id == uid; });
            std::set<std::string> train_ids, test_ids;
            if (split.train.users.count(uid))
                for (const auto& s : split.train.users.at(uid)) train_ids.insert(s.session_id);
            if (split.test.users.count(uid))
                for (const auto& s : split.test.users.at(uid)) test_ids.insert(s.session_id);
            if (skipped) {
                CHECK(train_ids.empty());
                CHECK(test_ids.empty());
                continue;
            }
            // every session in exactly one side
            CHECK(train_ids.size() + test_ids.size() == sessions.size());
            for (const auto& s : sessions)
                CHECK((train_ids.count(s.session_id) + test_ids.count(s.session_id)) == 1);
            // all training days strictly precede all test days
            int max_train_day = std::numeric_limits<int>::min();
            int min_test_day = std::numeric_limits<int>::max();
            for (const auto& s : split.train.users.at(uid))
                max_train_day = std::max(max_train_day, s.day_index);
            for (const auto& s : split.test.users.at(uid))
                min_test_day = std::min(min_test_day, s.day_index);
            CHECK(max_train_day < min_test_day);
        }
    }
}

TEST_CASE("slot_of worked examples") {
    CHECK(slot_of(0.0, 48) == 0);
    CHECK(slot_of(7199.0, 48) == 3);   // 01:59:59 in 30-minute slots
    CHECK(slot_of(86400.0 / 48, 48) == 1);
    CHECK(slot_of(86399.0, 48) == 47);
    CHECK(slot_of(86400.0, 48) == 0);  // wraps at midnight
    CHECK(slot_of(-1.0, 48) == 47);    // wraps backwards too
    CHECK(slot_of(12345.0, 1) == 0);
}

TEST_CASE("slot_of covers exactly 0..N-1 over a day sweep", "[property]") {
    for (int n : {48, 7, 96}) {
        std::set<int> seen;
        for (int s = 0; s < 86400; ++s) {
            const int slot = slot_of(static_cast<double>(s), n);
            REQUIRE(slot >= 0);
            REQUIRE(slot < n);
            seen.insert(slot);
        }
        CHECK(static_cast<int>(seen.size()) == n);
    }
}

TEST_CASE("slot_of honors the timezone offset") {
    // 23:30 UTC is 00:30 in a +1h zone
    CHECK(slot_of(23.5 * 3600.0, 48, 3600.0) == 1);
    CHECK(day_index_of(23.5 * 3600.0, 3600.0) == 1);
    CHECK(day_index_of(23.5 * 3600.0, 0.0) == 0);
}
