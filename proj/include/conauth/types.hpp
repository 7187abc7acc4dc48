#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conauth {

/// The seven data channels a session can carry. The first four are biometric
/// (scored by a per-user verifier over extracted feature vectors), the last
/// three are behavior-based (scored against a frequency template).
enum class ChannelId {
    TouchGesture,
    Keystroke,
    Accelerometer,
    Gyroscope,
    Wifi,
    Gps,
    AppUsage,
};

inline constexpr std::array<ChannelId, 7> kAllChannels = {
    ChannelId::TouchGesture, ChannelId::Keystroke,  ChannelId::Accelerometer,
    ChannelId::Gyroscope,    ChannelId::Wifi,       ChannelId::Gps,
    ChannelId::AppUsage,
};

inline constexpr std::array<ChannelId, 4> kBiometricChannels = {
    ChannelId::TouchGesture,
    ChannelId::Keystroke,
    ChannelId::Accelerometer,
    ChannelId::Gyroscope,
};

inline constexpr std::array<ChannelId, 3> kBehaviorChannels = {
    ChannelId::Wifi,
    ChannelId::Gps,
    ChannelId::AppUsage,
};

inline constexpr bool is_behavior_channel(ChannelId c) {
    return c == ChannelId::Wifi || c == ChannelId::Gps || c == ChannelId::AppUsage;
}

inline constexpr bool is_biometric_channel(ChannelId c) { return !is_behavior_channel(c); }

inline constexpr const char* channel_name(ChannelId c) {
    switch (c) {
        case ChannelId::TouchGesture: return "touch";
        case ChannelId::Keystroke: return "keystroke";
        case ChannelId::Accelerometer: return "accelerometer";
        case ChannelId::Gyroscope: return "gyroscope";
        case ChannelId::Wifi: return "wifi";
        case ChannelId::Gps: return "gps";
        case ChannelId::AppUsage: return "app_usage";
    }
    return "unknown";
}

inline std::optional<ChannelId> channel_from_name(std::string_view name) {
    if (name == "touch") return ChannelId::TouchGesture;
    if (name == "keystroke" || name == "keys" || name == "key") return ChannelId::Keystroke;
    if (name == "accelerometer" || name == "accel") return ChannelId::Accelerometer;
    if (name == "gyroscope" || name == "gyro") return ChannelId::Gyroscope;
    if (name == "wifi") return ChannelId::Wifi;
    if (name == "gps") return ChannelId::Gps;
    if (name == "app_usage" || name == "apps") return ChannelId::AppUsage;
    return std::nullopt;
}

/// fixed feature dimensionality per biometric channel; 0 for behavior channels
inline constexpr int feature_dim(ChannelId c) {
    switch (c) {
        case ChannelId::TouchGesture: return 28;
        case ChannelId::Keystroke: return 18;
        case ChannelId::Accelerometer: return 27;
        case ChannelId::Gyroscope: return 27;
        default: return 0;
    }
}

/// One detection of a named event (WiFi SSID, app name, or quantized
/// "lat,lon" location string). event_id is always non-empty.
struct BehaviorEvent {
    std::string event_id;
    double timestamp = 0.0;  // seconds since epoch, UTC
};

struct TouchSample {
    double x = 0.0;
    double y = 0.0;
    double pressure = 0.0;  // optional in the wire format, default 0
    double t = 0.0;         // seconds, relative to gesture start
};

using TouchGestureData = std::vector<TouchSample>;

struct KeyEvent {
    std::string key_id;  // opaque, may be hashed/encrypted upstream
    double press_t = 0.0;
    double release_t = 0.0;  // >= press_t
};

struct InertialSample {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double t = 0.0;
};

using InertialWindow = std::vector<InertialSample>;

/// One unlock-to-lock interaction window. Any subset of channels may be
/// empty; scoring layers decide per channel whether the session contributes.
struct Session {
    std::string session_id;
    std::string user_id;
    int day_index = 0;  // derived from start_t and the configured day boundary
    double start_t = 0.0;
    double end_t = 0.0;

    std::vector<TouchGestureData> touch;
    std::vector<KeyEvent> keys;
    std::vector<InertialWindow> accel;
    std::vector<InertialWindow> gyro;
    std::vector<BehaviorEvent> wifi;
    std::vector<BehaviorEvent> gps;
    std::vector<BehaviorEvent> apps;

    const std::vector<BehaviorEvent>& behavior_events(ChannelId c) const {
        switch (c) {
            case ChannelId::Wifi: return wifi;
            case ChannelId::Gps: return gps;
            default: return apps;
        }
    }

    bool channel_has_data(ChannelId c) const {
        switch (c) {
            case ChannelId::TouchGesture: return !touch.empty();
            case ChannelId::Keystroke: return !keys.empty();
            case ChannelId::Accelerometer: return !accel.empty();
            case ChannelId::Gyroscope: return !gyro.empty();
            default: return !behavior_events(c).empty();
        }
    }
};

/// Sessions grouped per user, ordered by start_t. Immutable after load;
/// safe to read concurrently.
struct Dataset {
    std::map<std::string, std::vector<Session>> users;

    std::size_t session_count() const {
        std::size_t n = 0;
        for (const auto& [_, v] : users) n += v.size();
        return n;
    }
};

/// Fixed-length real vector extracted from one biometric sample.
struct FeatureVector {
    ChannelId channel = ChannelId::TouchGesture;
    std::vector<double> values;
    std::string source_session;
};

struct SkipRecord {
    std::string user_id;
    std::string reason;
};

struct ChannelSkip {
    ChannelId channel = ChannelId::TouchGesture;
    std::string reason;
};

}  // namespace conauth
