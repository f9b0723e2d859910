#include "ppgbench/rhythm.hpp"

#include <unordered_map>

namespace ppgbench {

namespace {

constexpr std::array<std::string_view, kRhythmCodeCount> kNames = {
    "SR",     "STACH",  "AF",    "SBRAD",  "VPACE", "AVPACE", "AFLT",
    "APACE",  "SARRH",  "JR",    "SVTACH", "MATACH", "VTACH", "WAPACE",
    "JTACH",  "OTHER",  "PATACH", "VFIB",  "ASYS",  "IDIOV",  "1AVB",
    "LBBB",   "RBBB",   "2AVBM1", "3AVB",  "2AVBM2",
};

}  // namespace

const std::array<RhythmCode, kRhythmCodeCount>& all_rhythm_codes() {
    static const std::array<RhythmCode, kRhythmCodeCount> codes = [] {
        std::array<RhythmCode, kRhythmCodeCount> out{};
        for (int i = 0; i < kRhythmCodeCount; ++i) out[i] = static_cast<RhythmCode>(i);
        return out;
    }();
    return codes;
}

std::string_view to_string(RhythmCode code) {
    return kNames[static_cast<int>(code)];
}

std::optional<RhythmCode> parse_rhythm_code(std::string_view text) {
    static const std::unordered_map<std::string_view, RhythmCode> lookup = [] {
        std::unordered_map<std::string_view, RhythmCode> m;
        for (int i = 0; i < kRhythmCodeCount; ++i) m.emplace(kNames[i], static_cast<RhythmCode>(i));
        return m;
    }();
    auto it = lookup.find(text);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
}

bool is_conduction_code(RhythmCode code) {
    switch (code) {
        case RhythmCode::AVB1:
        case RhythmCode::LBBB:
        case RhythmCode::RBBB:
        case RhythmCode::AVBM1_2:
        case RhythmCode::AVB3:
        case RhythmCode::AVBM2_2:
            return true;
        default:
            return false;
    }
}

}  // namespace ppgbench
