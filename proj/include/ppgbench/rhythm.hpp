#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace ppgbench {

// The 26 heart-rhythm annotation codes, in descending sample-count order
// (conduction labels last). The order is load-bearing: the first 13 codes
// are the ARRH task's output labels.
enum class RhythmCode : int {
    SR = 0,
    STACH,
    AF,
    SBRAD,
    VPACE,
    AVPACE,
    AFLT,
    APACE,
    SARRH,
    JR,
    SVTACH,
    MATACH,
    VTACH,
    WAPACE,
    JTACH,
    OTHER,
    PATACH,
    VFIB,
    ASYS,
    IDIOV,
    AVB1,     // serialized as "1AVB"
    LBBB,
    RBBB,
    AVBM1_2,  // serialized as "2AVBM1"
    AVB3,     // serialized as "3AVB"
    AVBM2_2,  // serialized as "2AVBM2"
};

inline constexpr int kRhythmCodeCount = 26;

const std::array<RhythmCode, kRhythmCodeCount>& all_rhythm_codes();

std::string_view to_string(RhythmCode code);

// Returns nullopt for anything outside the 26-code taxonomy.
std::optional<RhythmCode> parse_rhythm_code(std::string_view text);

// True for the six conduction codes excluded from every classification task.
bool is_conduction_code(RhythmCode code);

}  // namespace ppgbench
