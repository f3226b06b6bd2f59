#include "hcodec/conditioning.hpp"

#include "hcodec/error.hpp"
#include "hcodec/rng.hpp"
#include "hcodec/signal_frontend.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace hcodec {

using nlohmann::json;

namespace {

constexpr ConditionKind kSr[] = {ConditionKind::DegradedSpeech};
constexpr ConditionKind kTse[] = {ConditionKind::ReferenceSpeech, ConditionKind::MixtureSpeech};
constexpr ConditionKind kVc[] = {ConditionKind::ReferenceSpeech, ConditionKind::SourceSpeech};
constexpr ConditionKind kLass[] = {ConditionKind::Caption, ConditionKind::MixtureAudio};
constexpr ConditionKind kEditS[] = {ConditionKind::Instruction, ConditionKind::SourceSpeech};
constexpr ConditionKind kEditA[] = {ConditionKind::Instruction, ConditionKind::SourceAudio};

std::string upper(std::string_view s) {
    std::string out(s);
    for (char & c : out) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

std::string kinds_list(std::span<const ConditionKind> kinds) {
    std::string out = "[";
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        out += (i ? ", " : "");
        out += kind_name(kinds[i]);
    }
    return out + "]";
}

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

json matrix_to_json(const FeatureMatrix & f) {
    return json{{"frames", f.frames()},
                {"dims", f.dims()},
                {"fps", {f.fps().num, f.fps().den}},
                {"kind", static_cast<int>(f.kind())},
                {"data", f.data()}};
}

FeatureMatrix matrix_from_json(const json & j) {
    const auto frames = j.at("frames").get<std::size_t>();
    const auto dims = j.at("dims").get<std::size_t>();
    const auto fps = j.at("fps").get<std::vector<std::uint32_t>>();
    const int kind = j.at("kind").get<int>();
    if (fps.size() != 2 || fps[1] == 0 || kind < 0 || kind > static_cast<int>(FeatureKind::AcousticComplex)) {
        throw Error(Errc::InvalidConfig, "malformed embedding header");
    }
    FeatureMatrix f(frames, dims, Rational{fps[0], fps[1]}, static_cast<FeatureKind>(kind));
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != frames * dims) {
        throw Error(Errc::ShapeMismatch, "embedding data length does not match its shape");
    }
    f.data() = std::move(data);
    return f;
}

} // namespace

std::string_view mode_name(TaskMode mode) {
    switch (mode) {
        case TaskMode::SR:     return "SR";
        case TaskMode::TSE:    return "TSE";
        case TaskMode::rTSE:   return "rTSE";
        case TaskMode::VC:     return "VC";
        case TaskMode::LASS:   return "LASS";
        case TaskMode::EDIT_S: return "EDIT-S";
        case TaskMode::EDIT_A: return "EDIT-A";
    }
    return "?";
}

std::optional<TaskMode> parse_mode(std::string_view name, bool * via_alias) {
    std::string key = upper(name);
    std::replace(key.begin(), key.end(), '_', '-');
    if (via_alias) {
        *via_alias = false;
    }
    if (key == "SS") {
        if (via_alias) {
            *via_alias = true;
        }
        return TaskMode::rTSE;
    }
    for (TaskMode m : kAllModes) {
        if (upper(mode_name(m)) == key) {
            return m;
        }
    }
    return std::nullopt;
}

std::string_view kind_name(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::DegradedSpeech:  return "DegradedSpeech";
        case ConditionKind::ReferenceSpeech: return "ReferenceSpeech";
        case ConditionKind::MixtureSpeech:   return "MixtureSpeech";
        case ConditionKind::SourceSpeech:    return "SourceSpeech";
        case ConditionKind::Caption:         return "Caption";
        case ConditionKind::MixtureAudio:    return "MixtureAudio";
        case ConditionKind::Instruction:     return "Instruction";
        case ConditionKind::SourceAudio:     return "SourceAudio";
    }
    return "?";
}

std::string_view kind_label(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::DegradedSpeech:  return "Degraded Speech";
        case ConditionKind::ReferenceSpeech: return "Reference Speech";
        case ConditionKind::MixtureSpeech:   return "Mixture Speech";
        case ConditionKind::SourceSpeech:    return "Source Speech";
        case ConditionKind::Caption:         return "Caption";
        case ConditionKind::MixtureAudio:    return "Mixture Audio";
        case ConditionKind::Instruction:     return "Instruction";
        case ConditionKind::SourceAudio:     return "Source Audio";
    }
    return "?";
}

std::optional<ConditionKind> parse_kind(std::string_view name) {
    for (ConditionKind k : kAllConditionKinds) {
        if (name == kind_name(k) || name == kind_label(k)) {
            return k;
        }
    }
    return std::nullopt;
}

bool is_text_kind(ConditionKind kind) {
    return kind == ConditionKind::Caption || kind == ConditionKind::Instruction;
}

std::span<const ConditionKind> required_conditions(TaskMode mode) {
    switch (mode) {
        case TaskMode::SR:     return kSr;
        case TaskMode::TSE:    return kTse;
        case TaskMode::rTSE:   return kTse;
        case TaskMode::VC:     return kVc;
        case TaskMode::LASS:   return kLass;
        case TaskMode::EDIT_S: return kEditS;
        case TaskMode::EDIT_A: return kEditA;
    }
    return {};
}

std::uint32_t task_token_id(TaskMode mode, std::uint32_t codebook_size, std::uint32_t max_duration) {
    const std::uint64_t pad = static_cast<std::uint64_t>(codebook_size) * max_duration;
    const std::uint64_t id = pad + 1 + static_cast<std::uint64_t>(mode);
    if (codebook_size == 0 || max_duration == 0 || pad + kAllModes.size() > 0xFFFF) {
        throw Error(Errc::InvalidConfig, "task tokens do not fit a 16-bit vocabulary after K * d_max codes");
    }
    return static_cast<std::uint32_t>(id);
}

TaskMode mode_from_token(std::uint32_t token, std::uint32_t codebook_size, std::uint32_t max_duration) {
    const std::uint32_t first = task_token_id(TaskMode::SR, codebook_size, max_duration);
    if (token < first || token >= first + kAllModes.size()) {
        throw Error(Errc::CodeOutOfRange, "token " + std::to_string(token) + " is not a task token");
    }
    return static_cast<TaskMode>(token - first);
}

Condition audio_condition(ConditionKind kind, const Waveform & w, const CodecConfig & cfg) {
    if (is_text_kind(kind)) {
        throw Error(Errc::ConditionMismatch, std::string(kind_name(kind)) + " takes text, not audio");
    }
    FeatureMatrix f = stack_frames(semantic_proxy(w, cfg), cfg.stack_factor);
    f.set_fps(cfg.frame_rate());
    return Condition{kind, std::move(f)};
}

Condition text_condition(ConditionKind kind, std::string text) {
    if (!is_text_kind(kind)) {
        throw Error(Errc::ConditionMismatch, std::string(kind_name(kind)) + " takes audio, not text");
    }
    return Condition{kind, std::move(text)};
}

FeatureMatrix hash_text_embedding(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) {
        words.push_back(std::move(w));
    }
    FeatureMatrix f(words.size(), kHashEmbeddingDim, Rational{1, 1}, FeatureKind::TextEmbedding);
    for (std::size_t t = 0; t < words.size(); ++t) {
        Rng rng(fnv1a64(words[t]));
        double norm = 0.0;
        for (double & v : f.row(t)) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double & v : f.row(t)) {
            v /= norm;
        }
    }
    return f;
}

ConditioningSequence assemble(TaskMode mode, std::span<const Condition> conds, std::uint32_t codebook_size,
                              std::uint32_t max_duration, const TextEmbedder & embed) {
    const auto want = required_conditions(mode);
    std::vector<ConditionKind> got;
    for (const Condition & c : conds) {
        got.push_back(c.kind);
    }
    if (!std::equal(want.begin(), want.end(), got.begin(), got.end())) {
        throw Error(Errc::ConditionMismatch, std::string(mode_name(mode)) + " expects " + kinds_list(want) +
                                                 ", got " + kinds_list(got));
    }

    ConditioningSequence seq;
    seq.mode = mode;
    seq.task_token = task_token_id(mode, codebook_size, max_duration);
    for (const Condition & c : conds) {
        ConditionSlot slot;
        slot.kind = c.kind;
        if (is_text_kind(c.kind)) {
            const auto * text = std::get_if<std::string>(&c.payload);
            if (!text) {
                throw Error(Errc::ConditionMismatch, std::string(kind_name(c.kind)) + " payload must be text");
            }
            if (blank(*text)) {
                throw Error(Errc::EmptyCondition, std::string(kind_name(c.kind)) + " text is empty");
            }
            slot.embedding = embed(*text);
        } else {
            const auto * feats = std::get_if<FeatureMatrix>(&c.payload);
            if (!feats) {
                throw Error(Errc::ConditionMismatch, std::string(kind_name(c.kind)) + " payload must be audio features");
            }
            if (feats->frames() == 0) {
                throw Error(Errc::EmptyCondition, std::string(kind_name(c.kind)) + " has no frames");
            }
            slot.embedding = *feats;
        }
        seq.conditions.push_back(std::move(slot));
    }
    return seq;
}

std::string serialize_sequence(const ConditioningSequence & seq) {
    json conds = json::array();
    for (const ConditionSlot & s : seq.conditions) {
        conds.push_back({{"kind", kind_name(s.kind)}, {"embedding", matrix_to_json(s.embedding)}});
    }
    const json j{{"mode", mode_name(seq.mode)},
                 {"task_token", seq.task_token},
                 {"conditions", std::move(conds)},
                 {"generation_marker", seq.generation_marker}};
    return j.dump();
}

ConditioningSequence parse_sequence(std::string_view text) {
    try {
        const json j = json::parse(text);
        ConditioningSequence seq;
        const auto mode = parse_mode(j.at("mode").get<std::string>());
        if (!mode) {
            throw Error(Errc::InvalidConfig, "unknown mode " + j.at("mode").dump());
        }
        seq.mode = *mode;
        seq.task_token = j.at("task_token").get<std::uint32_t>();
        seq.generation_marker = j.at("generation_marker").get<bool>();
        for (const json & c : j.at("conditions")) {
            const auto kind = parse_kind(c.at("kind").get<std::string>());
            if (!kind) {
                throw Error(Errc::InvalidConfig, "unknown condition kind " + c.at("kind").dump());
            }
            seq.conditions.push_back({*kind, matrix_from_json(c.at("embedding"))});
        }
        const auto want = required_conditions(seq.mode);
        if (!std::equal(want.begin(), want.end(), seq.conditions.begin(), seq.conditions.end(),
                        [](ConditionKind k, const ConditionSlot & s) { return k == s.kind; })) {
            throw Error(Errc::ConditionMismatch, "serialized conditions do not match mode " +
                                                     std::string(mode_name(seq.mode)));
        }
        return seq;
    } catch (const json::exception & e) {
        throw Error(Errc::InvalidConfig, std::string("conditioning json: ") + e.what());
    }
}

std::vector<ModeRow> validate_table() {
    std::vector<ModeRow> rows;
    for (TaskMode m : kAllModes) {
        std::string token = "T_" + std::string(mode_name(m));
        std::replace(token.begin(), token.end(), '-', '_');
        const auto req = required_conditions(m);
        rows.push_back({m, std::move(token), {req.begin(), req.end()}});
    }
    return rows;
}

std::string format_table(const std::vector<ModeRow> & rows, std::uint32_t codebook_size, std::uint32_t max_duration) {
    std::string out = "# mode\ttask_token\ttoken_id\tconditions\n";
    for (const ModeRow & r : rows) {
        out += std::string(mode_name(r.mode)) + "\t" + r.token_name + "\t" +
               std::to_string(task_token_id(r.mode, codebook_size, max_duration)) + "\t";
        for (std::size_t i = 0; i < r.conditions.size(); ++i) {
            out += (i ? ", " : "");
            out += kind_label(r.conditions[i]);
        }
        out += "\n";
    }
    out += "# SS is accepted as an alias of rTSE; it has no row of its own\n";
    return out;
}

ConditionManifest parse_manifest(std::string_view text) {
    try {
        const json j = json::parse(text);
        ConditionManifest m;
        const std::string name = j.at("mode").get<std::string>();
        const auto mode = parse_mode(name, &m.mode_via_alias);
        if (!mode) {
            throw Error(Errc::InvalidConfig, "unknown mode " + name);
        }
        m.mode = *mode;
        for (const json & c : j.at("conditions")) {
            const std::string kname = c.at("kind").get<std::string>();
            const auto kind = parse_kind(kname);
            if (!kind) {
                throw Error(Errc::InvalidConfig, "unknown condition kind " + kname);
            }
            ManifestCondition mc;
            mc.kind = *kind;
            if (c.contains("text")) {
                mc.text = c.at("text").get<std::string>();
            }
            if (c.contains("path")) {
                mc.path = c.at("path").get<std::string>();
            }
            if (mc.text.has_value() == mc.path.has_value()) {
                throw Error(Errc::InvalidConfig, "condition " + kname + " needs exactly one of text or path");
            }
            m.conditions.push_back(std::move(mc));
        }
        return m;
    } catch (const json::exception & e) {
        throw Error(Errc::InvalidConfig, std::string("manifest json: ") + e.what());
    }
}

} // namespace hcodec
