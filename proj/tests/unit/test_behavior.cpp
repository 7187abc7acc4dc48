#include <catch2/catch_amalgamated.hpp>

#include "conauth/behavior.hpp"
#include "conauth/rng.hpp"

#include "../common/oracles.hpp"

using namespace conauth;

namespace {

// slots are 30 minutes at the default N = 48
BehaviorEvent at_slot(const std::string& id, int slot, int day = 0, double offset = 60.0) {
    return {id, day * 86400.0 + slot * 1800.0 + offset};
}

BehaviorTemplate example_template() {
    BehaviorTemplate tpl;
    tpl.channel = ChannelId::AppUsage;
    tpl.slots_per_day = 48;
    tpl.training_days = 6;
    tpl.entries[{"WhatsApp", 4}] = 5;
    tpl.entries[{"Navigator", 4}] = 3;
    tpl.entries[{"YouTube", 5}] = 1;
    tpl.entries[{"WhatsApp", 5}] = 1;
    tpl.entries[{"Facebook", 7}] = 2;
    return tpl;
}

}  // namespace

TEST_CASE("score_session sums squared matched frequencies") {
    const auto tpl = example_template();
    SECTION("worked example: 5^2 + 3^2 = 34") {
        const std::vector<BehaviorEvent> test = {at_slot("WhatsApp", 4), at_slot("Navigator", 4)};
        CHECK(score_session(tpl, test) == 34.0);
    }
    SECTION("no matching events") {
        const std::vector<BehaviorEvent> test = {at_slot("WhatsApp", 9), at_slot("Maps", 4)};
        CHECK(score_session(tpl, test) == 0.0);
    }
    SECTION("cross-slot matches: 1^2 + 2^2 = 5") {
        const std::vector<BehaviorEvent> test = {at_slot("WhatsApp", 5), at_slot("Facebook", 7)};
        CHECK(score_session(tpl, test) == 5.0);
    }
    SECTION("test duplicates count once by default, twice with the knob") {
        const std::vector<BehaviorEvent> test = {at_slot("WhatsApp", 4), at_slot("WhatsApp", 4)};
        CHECK(score_session(tpl, test) == 25.0);
        ProfilerConfig cfg;
        cfg.count_test_duplicates = true;
        CHECK(score_session(tpl, test, cfg) == 50.0);
    }
}

TEST_CASE("build_template dedup rules") {
    SECTION("same event twice in one slot on one day counts once") {
        const std::vector<BehaviorEvent> ev = {at_slot("a", 4, 0, 60), at_slot("a", 4, 0, 120)};
        const auto tpl = build_template(ChannelId::AppUsage, ev);
        REQUIRE(tpl.entries.size() == 1);
        CHECK(tpl.entries.at({"a", 4}) == 1);
    }
    SECTION("same day, different slots -> two entries of frequency 1") {
        const std::vector<BehaviorEvent> ev = {at_slot("a", 4), at_slot("a", 5)};
        const auto tpl = build_template(ChannelId::AppUsage, ev);
        REQUIRE(tpl.entries.size() == 2);
        CHECK(tpl.entries.at({"a", 4}) == 1);
        CHECK(tpl.entries.at({"a", 5}) == 1);
    }
    SECTION("five of six days -> frequency 5") {
        std::vector<BehaviorEvent> ev;
        for (int d = 0; d < 5; ++d) ev.push_back(at_slot("WhatsApp", 4, d));
        ev.push_back(at_slot("YouTube", 5, 5));  // sixth day seen, different event
        const auto tpl = build_template(ChannelId::AppUsage, ev);
        CHECK(tpl.entries.at({"WhatsApp", 4}) == 5);
        CHECK(tpl.training_days == 6);
    }
    SECTION("empty input -> empty template, zero scores") {
        const auto tpl = build_template(ChannelId::Wifi, {});
        CHECK(tpl.empty());
        CHECK(score_session(tpl, {at_slot("x", 1)}) == 0.0);
    }
}

TEST_CASE("template json round trip") {
    const auto tpl = example_template();
    nlohmann::json j = tpl;
    const auto back = j.get<BehaviorTemplate>();
    CHECK(back.entries == tpl.entries);
    CHECK(back.slots_per_day == tpl.slots_per_day);
    CHECK(back.channel == tpl.channel);
}

TEST_CASE("score_session equals the brute-force oracle", "[property]") {
    RngStream rng(11, "test/behavior-oracle");
    const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 1000; ++trial) {
        const int slots = 8;
        BehaviorTemplate tpl;
        tpl.channel = ChannelId::Wifi;
        tpl.slots_per_day = slots;
        std::vector<oracle::TemplateEntry> entries;
        const int n_entries = static_cast<int>(rng.uniform_int(0, 10));
        for (int i = 0; i < n_entries; ++i) {
            const auto& id = ids[static_cast<std::size_t>(rng.uniform_int(0, 4))];
            const int slot = static_cast<int>(rng.uniform_int(0, slots - 1));
            const int freq = static_cast<int>(rng.uniform_int(1, 6));
            if (tpl.entries.count({id, slot})) continue;
            tpl.entries[{id, slot}] = freq;
            entries.push_back({id, slot, freq});
        }
        std::vector<BehaviorEvent> test;
        std::vector<std::pair<std::string, int>> test_pairs;
        const int n_test = static_cast<int>(rng.uniform_int(0, 10));
        for (int i = 0; i < n_test; ++i) {
            const auto& id = ids[static_cast<std::size_t>(rng.uniform_int(0, 4))];
            const int slot = static_cast<int>(rng.uniform_int(0, slots - 1));
            test.push_back({id, slot * (86400.0 / slots) + 1.0});
            test_pairs.emplace_back(id, slot);
        }
        const bool dups = rng.uniform01() < 0.5;
        ProfilerConfig cfg;
        cfg.slots_per_day = slots;
        cfg.count_test_duplicates = dups;
        const double got = score_session(tpl, test, cfg);
        const double want = oracle::behavior_score(entries, test_pairs, dups);
        REQUIRE(got == want);  // integer-valued, exact
    }
}

TEST_CASE("score_session monotonicity and bound", "[property]") {
    RngStream rng(13, "test/behavior-mono");
    const auto tpl = example_template();
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<BehaviorEvent> test;
        const int n = static_cast<int>(rng.uniform_int(0, 6));
        for (int i = 0; i < n; ++i) {
            test.push_back(at_slot(rng.uniform01() < 0.5 ? "WhatsApp" : "zzz",
                                   static_cast<int>(rng.uniform_int(0, 7))));
        }
        const double base = score_session(tpl, test);

        auto with_matching = test;
        with_matching.push_back(at_slot("Facebook", 7));
        CHECK(score_session(tpl, with_matching) >= base);

        auto with_nonmatching = test;
        with_nonmatching.push_back(at_slot("nosuchapp", 2));
        CHECK(score_session(tpl, with_nonmatching) == base);

        // score <= matched pairs x (training days)^2
        const double bound = static_cast<double>(tpl.entries.size()) *
                             static_cast<double>(tpl.training_days) * tpl.training_days;
        CHECK(base <= bound);
    }
}
