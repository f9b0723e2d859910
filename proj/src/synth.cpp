#include "ppgbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "ppgbench/errors.hpp"

namespace ppgbench {

namespace {

constexpr double kSystolicPhase = 0.2;
constexpr double kRespDepth = 0.2;          // amplitude-modulation depth
constexpr double kWanderAmp = 0.1;          // absolute units, not BP-scaled
constexpr double kPulsePerMmhg = 1.0 / 40.0;   // amplitude per mmHg pulse pressure
constexpr double kOffsetPerMmhg = 1.0 / 80.0;  // baseline per mmHg diastolic

double interval_cv(RhythmCode rhythm) {
    switch (rhythm) {
        case RhythmCode::AF: return 0.24;
        case RhythmCode::SARRH: return 0.08;
        default: return 0.02;  // SR, STACH, SBRAD
    }
}

// splitmix64; used to derive independent per-segment streams from one
// master seed so parallel and serial generation agree.
std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (tag * 0x9E3779B97F4A7C15ull);
    std::uint64_t b = splitmix64(s);
    s = b ^ index;
    return splitmix64(s);
}

// Samplers written out so the bit stream does not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang; valid for shape >= 1 (ours is ~17).
    double gamma(double shape, double scale) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = normal();
            const double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = 1.0 - uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

const char* rhythm_hr_rule(RhythmCode rhythm) {
    switch (rhythm) {
        case RhythmCode::STACH: return "STACH requires hr_bpm > 100";
        case RhythmCode::SBRAD: return "SBRAD requires hr_bpm < 60";
        case RhythmCode::SR: return "SR requires 60 <= hr_bpm <= 100";
        default: return nullptr;
    }
}

bool hr_consistent(RhythmCode rhythm, double hr) {
    switch (rhythm) {
        case RhythmCode::STACH: return hr > 100.0;
        case RhythmCode::SBRAD: return hr < 60.0;
        case RhythmCode::SR: return hr >= 60.0 && hr <= 100.0;
        default: return true;
    }
}

bool synth_rhythm(RhythmCode r) {
    return r == RhythmCode::SR || r == RhythmCode::STACH || r == RhythmCode::SBRAD ||
           r == RhythmCode::AF || r == RhythmCode::SARRH;
}

struct EthnicityPool {
    double weight;
    std::vector<const char*> labels;
};

// Raw MIMIC-style labels with cohort-like group weights.
const std::vector<EthnicityPool>& ethnicity_pools() {
    static const std::vector<EthnicityPool> pools = {
        {0.720, {"WHITE", "WHITE - RUSSIAN", "WHITE - OTHER EUROPEAN", "PORTUGUESE"}},
        {0.092, {"BLACK/AFRICAN AMERICAN", "BLACK/CAPE VERDEAN", "BLACK/HAITIAN"}},
        {0.041, {"HISPANIC OR LATINO", "HISPANIC/LATINO - PUERTO RICAN", "HISPANIC/LATINO - DOMINICAN"}},
        {0.028, {"ASIAN", "ASIAN - CHINESE", "ASIAN - VIETNAMESE"}},
        {0.119, {"UNKNOWN/NOT SPECIFIED", "OTHER", "MULTI RACE ETHNICITY", "AMERICAN INDIAN/ALASKA NATIVE"}},
    };
    return pools;
}

}  // namespace

void validate_synth_params(const SynthParams& p) {
    if (!synth_rhythm(p.rhythm))
        throw ValidationError(std::string("generator does not support rhythm ") +
                              std::string(to_string(p.rhythm)));
    if (!(p.hr_bpm > 0.0)) throw ValidationError("hr_bpm must be positive");
    if (!(p.rr_bpm > 0.0)) throw ValidationError("rr_bpm must be positive");
    if (!(p.duration_s > 0.0)) throw ValidationError("duration_s must be positive");
    if (!(p.sampling_rate_hz > 0.0)) throw ValidationError("sampling_rate_hz must be positive");
    if (p.noise_std < 0.0) throw ValidationError("noise_std must be >= 0");
    if (!(p.sbp_mmhg > p.dbp_mmhg) || !(p.dbp_mmhg > 0.0))
        throw ValidationError("requires sbp_mmhg > dbp_mmhg > 0");
    if (!(p.morphology.systolic_width > 0.0) || !(p.morphology.dicrotic_width > 0.0))
        throw ValidationError("morphology widths must be positive");
    if (!(p.morphology.dicrotic_delay > 0.0) || !(p.morphology.dicrotic_delay < 1.0))
        throw ValidationError("dicrotic_delay must be in (0, 1)");
    if (const char* rule = rhythm_hr_rule(p.rhythm); rule && !hr_consistent(p.rhythm, p.hr_bpm))
        throw ValidationError(std::string("hr_bpm ") + std::to_string(p.hr_bpm) +
                              " inconsistent with rhythm: " + rule);
}

double beat_template(double phase, const BeatMorphology& m) {
    const double ds = phase - kSystolicPhase;
    const double dd = phase - (kSystolicPhase + m.dicrotic_delay);
    return m.systolic_amp * std::exp(-ds * ds / (2.0 * m.systolic_width * m.systolic_width)) +
           m.dicrotic_amp * std::exp(-dd * dd / (2.0 * m.dicrotic_width * m.dicrotic_width));
}

std::pair<PpgSegment, GroundTruth> generate_segment(const SynthParams& p,
                                                    std::vector<double>* onsets_out) {
    validate_synth_params(p);
    Rng rng(p.seed);

    const double mean_interval = 60.0 / p.hr_bpm;
    const double cv = interval_cv(p.rhythm);
    const bool gamma_intervals = p.rhythm == RhythmCode::AF;
    const double gamma_shape = 1.0 / (cv * cv);

    auto draw_interval = [&]() {
        double iv = gamma_intervals ? rng.gamma(gamma_shape, mean_interval / gamma_shape)
                                    : mean_interval * (1.0 + cv * rng.normal());
        return std::max(iv, 0.2 * mean_interval);
    };

    const double resp_phase = 2.0 * std::numbers::pi * rng.uniform();
    const double wander_phase = 2.0 * std::numbers::pi * rng.uniform();

    // Beat onsets straddling [0, duration]; the first beat starts before 0.
    std::vector<double> onsets;
    double first_iv = draw_interval();
    onsets.push_back(-rng.uniform() * first_iv);
    onsets.push_back(onsets.back() + first_iv);
    while (onsets.back() <= p.duration_s) onsets.push_back(onsets.back() + draw_interval());
    if (onsets_out) *onsets_out = onsets;

    const auto n = static_cast<size_t>(std::llround(p.duration_s * p.sampling_rate_hz));
    const double pulse_amp = (p.sbp_mmhg - p.dbp_mmhg) * kPulsePerMmhg;
    const double offset = p.dbp_mmhg * kOffsetPerMmhg;
    const double resp_hz = p.rr_bpm / 60.0;
    const double noise_scale = pulse_amp * p.noise_std;

    PpgSegment seg;
    seg.samples.resize(n);
    seg.sampling_rate_hz = p.sampling_rate_hz;
    size_t beat = 0;
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / p.sampling_rate_hz;
        while (beat + 1 < onsets.size() && onsets[beat + 1] <= t) ++beat;
        const double phase = (t - onsets[beat]) / (onsets[beat + 1] - onsets[beat]);
        const double resp = std::sin(2.0 * std::numbers::pi * resp_hz * t + resp_phase);
        const double wander = std::sin(2.0 * std::numbers::pi * resp_hz * t + wander_phase);
        double x = offset + kWanderAmp * wander +
                   pulse_amp * (1.0 + kRespDepth * resp) * beat_template(phase, p.morphology);
        if (noise_scale > 0.0) x += noise_scale * rng.normal();
        seg.samples[i] = static_cast<float>(x);
    }

    seg.rhythm = p.rhythm;
    seg.hr_bpm = p.hr_bpm;
    seg.rr_bpm = p.rr_bpm;
    seg.sbp_mmhg = p.sbp_mmhg;
    seg.dbp_mmhg = p.dbp_mmhg;

    GroundTruth truth{p.hr_bpm, p.rr_bpm, p.sbp_mmhg, p.dbp_mmhg, p.rhythm};
    return {std::move(seg), truth};
}

ParamRange default_hr_range(RhythmCode rhythm) {
    switch (rhythm) {
        case RhythmCode::STACH: return {101.0, 140.0};
        case RhythmCode::SBRAD: return {40.0, 59.0};
        default: return {75.0, 98.7};  // cohort IQR
    }
}

namespace {

void validate_class_spec(const ClassSpec& c) {
    const std::string name(to_string(c.rhythm));
    if (!synth_rhythm(c.rhythm))
        throw ValidationError("class " + name + ": generator does not support this rhythm");
    if (c.count < 0) throw ValidationError("class " + name + ": count must be >= 0");
    auto check_range = [&](const ParamRange& r, const char* field) {
        if (!(r.lo <= r.hi))
            throw ValidationError("class " + name + ": empty " + field + " range [" +
                                  std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
        if (!(r.lo > 0.0)) throw ValidationError("class " + name + ": " + field + " must be positive");
    };
    check_range(c.hr_bpm, "hr_bpm");
    check_range(c.rr_bpm, "rr_bpm");
    check_range(c.sbp_mmhg, "sbp_mmhg");
    check_range(c.dbp_mmhg, "dbp_mmhg");
    if (!(c.sbp_mmhg.lo > c.dbp_mmhg.hi))
        throw ValidationError("class " + name + ": sbp_mmhg range must lie above dbp_mmhg range");
    if (const char* rule = rhythm_hr_rule(c.rhythm);
        rule && !(hr_consistent(c.rhythm, c.hr_bpm.lo) && hr_consistent(c.rhythm, c.hr_bpm.hi)))
        throw ValidationError("class " + name + ": hr_bpm range [" + std::to_string(c.hr_bpm.lo) + ", " +
                              std::to_string(c.hr_bpm.hi) + "] violates: " + rule);
}

}  // namespace

Dataset generate_dataset(const SynthSpec& spec) {
    if (spec.segments_per_subject < 1)
        throw ValidationError("segments_per_subject must be >= 1");
    if (!(spec.noise_std >= 0.0)) throw ValidationError("noise_std must be >= 0");

    // An all-zero hr range means "use the rhythm's default".
    std::vector<ClassSpec> classes = spec.classes;
    for (ClassSpec& c : classes) {
        if (c.hr_bpm.lo == 0.0 && c.hr_bpm.hi == 0.0) c.hr_bpm = default_hr_range(c.rhythm);
        validate_class_spec(c);
    }

    Dataset dataset;
    dataset.provenance = "synthetic";

    std::uint64_t subject_index = 0;
    std::uint64_t global_segment = 0;
    for (size_t ci = 0; ci < classes.size(); ++ci) {
        const ClassSpec& cls = classes[ci];
        const std::string class_name(to_string(cls.rhythm));
        for (int k = 0; k < cls.count; ++k) {
            if (k % spec.segments_per_subject == 0 && k > 0) ++subject_index;

            Rng assign(derive_seed(spec.seed, 1, global_segment));
            SynthParams params;
            params.rhythm = cls.rhythm;
            params.hr_bpm = assign.uniform(cls.hr_bpm.lo, cls.hr_bpm.hi);
            params.rr_bpm = assign.uniform(cls.rr_bpm.lo, cls.rr_bpm.hi);
            params.sbp_mmhg = assign.uniform(cls.sbp_mmhg.lo, cls.sbp_mmhg.hi);
            params.dbp_mmhg = assign.uniform(cls.dbp_mmhg.lo, cls.dbp_mmhg.hi);
            params.noise_std = spec.noise_std;
            params.duration_s = spec.duration_s;
            params.sampling_rate_hz = spec.sampling_rate_hz;
            params.seed = derive_seed(spec.seed, 2, global_segment);

            auto [seg, truth] = generate_segment(params);
            char seg_id[64];
            std::snprintf(seg_id, sizeof(seg_id), "%s-%06llu", class_name.c_str(),
                          static_cast<unsigned long long>(global_segment + 1));
            char subject_id[64];
            std::snprintf(subject_id, sizeof(subject_id), "subj-%06llu",
                          static_cast<unsigned long long>(subject_index + 1));
            seg.segment_id = seg_id;
            seg.subject_id = subject_id;
            seg.fold = static_cast<int>(subject_index % 10) + 1;

            if (spec.demographics) {
                Rng demo(derive_seed(spec.seed, 3, subject_index));
                seg.age_years = std::floor(demo.uniform(40.0, 90.0));
                seg.weight_kg = std::round(demo.uniform(50.0, 120.0) * 10.0) / 10.0;
                seg.height_cm = std::round(demo.uniform(150.0, 190.0) * 10.0) / 10.0;
                seg.gender = demo.uniform() < 0.44 ? Gender::Female : Gender::Male;
                double pick = demo.uniform();
                const auto& pools = ethnicity_pools();
                const EthnicityPool* pool = &pools.back();
                for (const auto& p : pools) {
                    if (pick < p.weight) {
                        pool = &p;
                        break;
                    }
                    pick -= p.weight;
                }
                seg.ethnicity_raw =
                    pool->labels[static_cast<size_t>(demo.uniform() * static_cast<double>(pool->labels.size()))];
            }
            dataset.segments.push_back(std::move(seg));
            ++global_segment;
        }
        if (cls.count > 0) ++subject_index;  // subjects never span classes
    }

    validate_dataset(dataset);
    return dataset;
}

SynthSpec load_synth_spec(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw ValidationError("cannot open synth spec " + json_path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("synth spec " + json_path.string() + ": " + e.what());
    }

    SynthSpec spec;
    spec.seed = doc.value("seed", 0ull);
    spec.noise_std = doc.value("noise_std", 0.1);
    spec.duration_s = doc.value("duration_s", 30.0);
    spec.sampling_rate_hz = doc.value("sampling_rate_hz", 125.0);
    spec.segments_per_subject = doc.value("segments_per_subject", 4);
    spec.demographics = doc.value("demographics", true);

    if (!doc.contains("classes") || !doc["classes"].is_array())
        throw ValidationError("synth spec: missing 'classes' array");
    auto parse_range = [](const nlohmann::json& node, ParamRange fallback) {
        if (node.is_null()) return fallback;
        if (!node.is_array() || node.size() != 2)
            throw ValidationError("synth spec: range must be a [lo, hi] array");
        return ParamRange{node[0].get<double>(), node[1].get<double>()};
    };
    for (const auto& node : doc["classes"]) {
        ClassSpec cls;
        const std::string rhythm_text = node.value("rhythm", "");
        auto code = parse_rhythm_code(rhythm_text);
        if (!code) throw ValidationError("synth spec: unknown rhythm '" + rhythm_text + "'");
        cls.rhythm = *code;
        cls.count = node.value("count", 0);
        cls.hr_bpm = parse_range(node.value("hr_bpm", nlohmann::json()), default_hr_range(cls.rhythm));
        cls.rr_bpm = parse_range(node.value("rr_bpm", nlohmann::json()), cls.rr_bpm);
        cls.sbp_mmhg = parse_range(node.value("sbp_mmhg", nlohmann::json()), cls.sbp_mmhg);
        cls.dbp_mmhg = parse_range(node.value("dbp_mmhg", nlohmann::json()), cls.dbp_mmhg);
        spec.classes.push_back(cls);
    }
    return spec;
}

}  // namespace ppgbench
