#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "conauth/features.hpp"
#include "conauth/rng.hpp"

#include "../common/oracles.hpp"

using namespace conauth;

TEST_CASE("stat_summary on simple inputs") {
    SECTION("constant list") {
        const std::vector<double> xs = {5, 5, 5, 5};
        const auto s = stat_summary(xs);
        CHECK(s.mean == 5.0);
        CHECK(s.median == 5.0);
        CHECK(s.max == 5.0);
        CHECK(s.min == 5.0);
        CHECK(s.max_minus_min == 0.0);
        CHECK(s.std_dev == 0.0);
        CHECK(s.p1 == 5.0);
        CHECK(s.p99 == 5.0);
        CHECK(s.p99_minus_p1 == 0.0);
    }
    SECTION("1..4 with population variance") {
        const std::vector<double> xs = {1, 2, 3, 4};
        const auto s = stat_summary(xs);
        CHECK(s.mean == 2.5);
        CHECK(s.median == 2.5);
        CHECK_THAT(s.std_dev, Catch::Matchers::WithinAbs(std::sqrt(1.25), 1e-12));
    }
    SECTION("percentiles interpolate on the 0..100 ramp") {
        std::vector<double> xs(101);
        for (int i = 0; i <= 100; ++i) xs[static_cast<std::size_t>(i)] = i;
        const auto s = stat_summary(xs);
        CHECK_THAT(s.p1, Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(s.p99, Catch::Matchers::WithinAbs(99.0, 1e-12));
    }
    SECTION("empty input throws") {
        REQUIRE_THROWS_AS(stat_summary(std::vector<double>{}), std::invalid_argument);
    }
    SECTION("order invariants on random data") {
        RngStream rng(3, "test/stat-order");
        for (int t = 0; t < 100; ++t) {
            std::vector<double> xs;
            const int n = 1 + static_cast<int>(rng.uniform_int(0, 30));
            for (int i = 0; i < n; ++i) xs.push_back(rng.normal(0, 10));
            const auto s = stat_summary(xs);
            CHECK(s.min <= s.p1);
            CHECK(s.p1 <= s.median);
            CHECK(s.median <= s.p99);
            CHECK(s.p99 <= s.max);
            CHECK(s.std_dev >= 0.0);
            CHECK(s.max_minus_min == s.max - s.min);
        }
    }
}

TEST_CASE("extract_inertial") {
    SECTION("constant (1,2,3) window") {
        InertialWindow w(5, InertialSample{1, 2, 3, 0});
        for (std::size_t i = 0; i < w.size(); ++i) w[i].t = static_cast<double>(i);
        const auto fv = extract_inertial(ChannelId::Accelerometer, w);
        REQUIRE(fv);
        const std::vector<double> want = {1, 1, 1, 1, 0, 0, 1, 1, 0,
                                          2, 2, 2, 2, 0, 0, 2, 2, 0,
                                          3, 3, 3, 3, 0, 0, 3, 3, 0};
        REQUIRE(fv->values.size() == 27);
        for (std::size_t i = 0; i < 27; ++i) CHECK(fv->values[i] == want[i]);
    }
    SECTION("only z varies -> x and y blocks have zero spread") {
        InertialWindow w;
        for (int i = 0; i < 10; ++i)
            w.push_back({1.0, 2.0, static_cast<double>(i), static_cast<double>(i)});
        const auto fv = extract_inertial(ChannelId::Gyroscope, w);
        REQUIRE(fv);
        CHECK(fv->values[4] == 0.0);   // x range
        CHECK(fv->values[5] == 0.0);   // x std
        CHECK(fv->values[13] == 0.0);  // y range
        CHECK(fv->values[14] == 0.0);  // y std
        CHECK(fv->values[22] > 0.0);   // z range
    }
    SECTION("too short windows are skipped") {
        CHECK_FALSE(extract_inertial(ChannelId::Accelerometer, {}));
        CHECK_FALSE(extract_inertial(ChannelId::Accelerometer, {{1, 2, 3, 0}}));
    }
    SECTION("matches the independent oracle on random windows") {
        RngStream rng(5, "test/inertial-oracle");
        for (int t = 0; t < 100; ++t) {
            InertialWindow w;
            std::vector<oracle::InertialPoint> ow;
            const int n = 2 + static_cast<int>(rng.uniform_int(0, 48));
            for (int i = 0; i < n; ++i) {
                const double x = rng.normal(0, 3), y = rng.normal(1, 2), z = rng.normal(-2, 5);
                w.push_back({x, y, z, i * 0.02});
                ow.push_back({x, y, z, i * 0.02});
            }
            const auto fv = extract_inertial(ChannelId::Accelerometer, w);
            REQUIRE(fv);
            const auto want = oracle::inertial_features(ow);
            REQUIRE(fv->values.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i)
                CHECK(oracle::rel_close(fv->values[i], want[i]));
        }
    }
    SECTION("statistics ignore sample order") {
        RngStream rng(6, "test/inertial-shuffle");
        InertialWindow w;
        for (int i = 0; i < 20; ++i)
            w.push_back({rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1), i * 0.02});
        auto shuffled = w;
        rng.shuffle(shuffled);
        const auto a = extract_inertial(ChannelId::Accelerometer, w);
        const auto b = extract_inertial(ChannelId::Accelerometer, shuffled);
        REQUIRE(a);
        REQUIRE(b);
        for (std::size_t i = 0; i < a->values.size(); ++i)
            CHECK(oracle::rel_close(a->values[i], b->values[i]));
    }
}

TEST_CASE("extract_keystroke") {
    SECTION("two keys with constant timing") {
        const std::vector<KeyEvent> burst = {{"a", 0.0, 0.1}, {"b", 0.3, 0.4}};
        const auto fv = extract_keystroke(burst);
        REQUIRE(fv);
        REQUIRE(fv->values.size() == 18);
        // hold stats: mean/median 0.1, std 0, percentiles 0.1
        CHECK_THAT(fv->values[0], Catch::Matchers::WithinAbs(0.1, 1e-12));
        CHECK_THAT(fv->values[1], Catch::Matchers::WithinAbs(0.1, 1e-12));
        CHECK_THAT(fv->values[2], Catch::Matchers::WithinAbs(0.0, 1e-12));
        // press-press latency 0.3
        CHECK_THAT(fv->values[6], Catch::Matchers::WithinAbs(0.3, 1e-12));
        CHECK_THAT(fv->values[8], Catch::Matchers::WithinAbs(0.0, 1e-12));
        // release-press latency 0.2
        CHECK_THAT(fv->values[12], Catch::Matchers::WithinAbs(0.2, 1e-12));
    }
    SECTION("rollover typing yields a negative release-press latency") {
        const std::vector<KeyEvent> burst = {{"a", 0.0, 0.5}, {"b", 0.2, 0.6}};
        const auto fv = extract_keystroke(burst);
        REQUIRE(fv);
        CHECK_THAT(fv->values[12], Catch::Matchers::WithinAbs(-0.3, 1e-12));
    }
    SECTION("single key is skipped") {
        CHECK_FALSE(extract_keystroke(std::vector<KeyEvent>{{"a", 0.0, 0.1}}));
    }
    SECTION("matches the oracle on random bursts") {
        RngStream rng(9, "test/key-oracle");
        for (int t = 0; t < 100; ++t) {
            std::vector<KeyEvent> burst;
            std::vector<oracle::KeyPress> ob;
            const int n = 2 + static_cast<int>(rng.uniform_int(0, 10));
            double press = 0.0;
            for (int i = 0; i < n; ++i) {
                const double hold = 0.02 + rng.uniform01() * 0.2;
                burst.push_back({"k", press, press + hold});
                ob.push_back({press, press + hold});
                press += 0.03 + rng.uniform01() * 0.4;
            }
            const auto fv = extract_keystroke(burst);
            REQUIRE(fv);
            const auto want = oracle::keystroke_features(ob);
            for (std::size_t i = 0; i < want.size(); ++i)
                CHECK(oracle::rel_close(fv->values[i], want[i]));
        }
    }
}

TEST_CASE("segment_key_bursts splits on large gaps") {
    std::vector<KeyEvent> keys;
    for (int i = 0; i < 4; ++i) keys.push_back({"a", i * 0.2, i * 0.2 + 0.05});
    for (int i = 0; i < 3; ++i) keys.push_back({"b", 100.0 + i * 0.2, 100.0 + i * 0.2 + 0.05});
    const auto bursts = segment_key_bursts(keys, 5.0);
    REQUIRE(bursts.size() == 2);
    CHECK(bursts[0].size() == 4);
    CHECK(bursts[1].size() == 3);
}

TEST_CASE("extract_touch") {
    SECTION("two-point horizontal gesture") {
        const TouchGestureData g = {{0, 0, 0.5, 0.0}, {10, 0, 0.5, 1.0}};
        const auto fv = extract_touch(g);
        REQUIRE(fv);
        REQUIRE(fv->values.size() == 28);
        CHECK(fv->values[0] == 1.0);   // duration
        CHECK(fv->values[1] == 2.0);   // point count
        CHECK(fv->values[6] == 10.0);  // path length
        CHECK(fv->values[7] == 10.0);  // direct distance
        CHECK(fv->values[8] == 1.0);   // straightness
        CHECK(fv->values[14] == 10.0); // mean vx
        CHECK(fv->values[15] == 0.0);  // mean vy
        CHECK(fv->values[16] == 0.0);  // acceleration features collapse to 0
    }
    SECTION("closed loop: direct distance and straightness are 0") {
        TouchGestureData g;
        for (int i = 0; i <= 8; ++i) {
            const double a = 2.0 * 3.14159265358979 * i / 8.0;
            g.push_back({std::cos(a), std::sin(a), 0.0, i * 0.1});
        }
        const auto fv = extract_touch(g);
        REQUIRE(fv);
        CHECK_THAT(fv->values[7], Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK_THAT(fv->values[8], Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK(fv->values[6] > 0.0);
    }
    SECTION("equal consecutive timestamps keep the last sample") {
        const TouchGestureData g = {{0, 0, 0, 0.0}, {5, 5, 0, 0.0}, {10, 0, 0, 1.0}};
        const auto fv = extract_touch(g);
        REQUIRE(fv);
        CHECK(fv->values[1] == 2.0);  // deduped to two points
        CHECK(fv->values[2] == 5.0);  // start is the surviving sample
    }
    SECTION("decreasing timestamps skip the gesture") {
        const TouchGestureData g = {{0, 0, 0, 1.0}, {1, 1, 0, 0.5}};
        CHECK_FALSE(extract_touch(g));
    }
    SECTION("matches the oracle on random gestures") {
        RngStream rng(15, "test/touch-oracle");
        for (int t = 0; t < 100; ++t) {
            TouchGestureData g;
            std::vector<oracle::TouchPoint> og;
            const int n = 2 + static_cast<int>(rng.uniform_int(0, 18));
            double x = rng.uniform(0, 300), y = rng.uniform(0, 600), tt = 0.0;
            for (int i = 0; i < n; ++i) {
                const double p = rng.uniform(0, 1);
                g.push_back({x, y, p, tt});
                og.push_back({x, y, p, tt});
                x += rng.normal(0, 15);
                y += rng.normal(0, 15);
                tt += 0.005 + rng.uniform01() * 0.05;
            }
            const auto fv = extract_touch(g);
            REQUIRE(fv);
            const auto want = oracle::touch_features(og);
            REQUIRE(fv->values.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i)
                CHECK(oracle::rel_close(fv->values[i], want[i]));
        }
    }
}

TEST_CASE("touch invariances", "[property]") {
    RngStream rng(21, "test/touch-invariance");
    // per-feature behavior under translation (t) and time scaling exponent (e):
    // value' = value + shift (translated features) or value * c^e
    struct Law {
        bool shifts_x;
        bool shifts_y;
        int time_exp;
    };
    const std::vector<Law> laws = {
        {false, false, 1},   // duration
        {false, false, 0},   // point count
        {true, false, 0},    // start x
        {false, true, 0},    // start y
        {true, false, 0},    // end x
        {false, true, 0},    // end y
        {false, false, 0},   // path
        {false, false, 0},   // direct
        {false, false, 0},   // straightness
        {false, false, 0},   // initial angle
        {false, false, 0},   // end-to-end angle
        {false, false, -1},  // vel mean
        {false, false, -1},  // vel max
        {false, false, -1},  // vel min
        {false, false, -1},  // vel x mean
        {false, false, -1},  // vel y mean
        {false, false, -2},  // acc mean
        {false, false, -2},  // acc max
        {false, false, -2},  // acc min
        {false, false, 0},   // pressure mean
        {false, false, 0},   // pressure max
        {false, false, 0},   // x range
        {false, false, 0},   // y range
        {false, false, 0},   // adjacent mean
        {false, false, 0},   // adjacent max
        {false, false, -1},  // path per second
        {false, false, 0},   // velocity local maxima
        {false, false, -1},  // vel median
    };
    for (int trial = 0; trial < 50; ++trial) {
        TouchGestureData g;
        double x = rng.uniform(0, 200), y = rng.uniform(0, 400), t = 0.0;
        const int n = 4 + static_cast<int>(rng.uniform_int(0, 12));
        for (int i = 0; i < n; ++i) {
            g.push_back({x, y, rng.uniform(0, 1), t});
            x += rng.normal(0, 10);
            y += rng.normal(0, 10);
            t += 0.01 + rng.uniform01() * 0.05;
        }
        const auto base = extract_touch(g);
        REQUIRE(base);

        const double dx = rng.uniform(-50, 50), dy = rng.uniform(-50, 50);
        auto shifted = g;
        for (auto& p : shifted) {
            p.x += dx;
            p.y += dy;
        }
        const auto sh = extract_touch(shifted);
        REQUIRE(sh);
        for (std::size_t i = 0; i < laws.size(); ++i) {
            const double want =
                base->values[i] + (laws[i].shifts_x ? dx : 0.0) + (laws[i].shifts_y ? dy : 0.0);
            CHECK(oracle::rel_close(sh->values[i], want, 1e-7));
        }

        const double c = rng.uniform(0.5, 3.0);
        auto scaled = g;
        for (auto& p : scaled) p.t *= c;
        const auto sc = extract_touch(scaled);
        REQUIRE(sc);
        for (std::size_t i = 0; i < laws.size(); ++i) {
            const double want = base->values[i] * std::pow(c, laws[i].time_exp);
            CHECK(oracle::rel_close(sc->values[i], want, 1e-7));
        }
    }
}

TEST_CASE("session_feature_vectors respects channel layout") {
    Session s;
    s.session_id = "sess";
    s.touch.push_back({{0, 0, 0, 0.0}, {1, 1, 0, 0.1}});
    s.touch.push_back({{0, 0, 0, 0.0}});  // too short, skipped
    s.keys = {{"a", 0.0, 0.1}, {"b", 0.2, 0.3}, {"c", 100.0, 100.1}};
    s.accel.push_back(InertialWindow{{0, 0, 0, 0}, {1, 1, 1, 0.02}});
    const auto touch = session_feature_vectors(s, ChannelId::TouchGesture);
    REQUIRE(touch.size() == 1);
    CHECK(touch[0].values.size() == 28);
    CHECK(touch[0].source_session == "sess");
    // the lone key after the burst gap cannot form latencies
    const auto keys = session_feature_vectors(s, ChannelId::Keystroke);
    REQUIRE(keys.size() == 1);
    CHECK(keys[0].values.size() == 18);
    const auto accel = session_feature_vectors(s, ChannelId::Accelerometer);
    REQUIRE(accel.size() == 1);
    CHECK(accel[0].values.size() == 27);
    CHECK(session_feature_vectors(s, ChannelId::Gyroscope).empty());
}

TEST_CASE("feature name tables match dimensionalities") {
    CHECK(touch_feature_names().size() == 28);
    CHECK(inertial_feature_names().size() == 27);
    CHECK(keystroke_feature_names().size() == 18);
}
