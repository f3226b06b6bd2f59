#pragma once

#include "hcodec/dual_codec.hpp"
#include "hcodec/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hcodec {

enum class TaskMode : std::uint8_t { SR = 0, TSE, rTSE, VC, LASS, EDIT_S, EDIT_A };

inline constexpr std::array<TaskMode, 7> kAllModes = {TaskMode::SR,   TaskMode::TSE,    TaskMode::rTSE,  TaskMode::VC,
                                                      TaskMode::LASS, TaskMode::EDIT_S, TaskMode::EDIT_A};

enum class ConditionKind : std::uint8_t {
    DegradedSpeech = 0,
    ReferenceSpeech,
    MixtureSpeech,
    SourceSpeech,
    Caption,
    MixtureAudio,
    Instruction,
    SourceAudio,
};

inline constexpr std::array<ConditionKind, 8> kAllConditionKinds = {
    ConditionKind::DegradedSpeech, ConditionKind::ReferenceSpeech, ConditionKind::MixtureSpeech,
    ConditionKind::SourceSpeech,   ConditionKind::Caption,         ConditionKind::MixtureAudio,
    ConditionKind::Instruction,    ConditionKind::SourceAudio};

// "SR", "TSE", "rTSE", "VC", "LASS", "EDIT-S", "EDIT-A"
std::string_view mode_name(TaskMode mode);
// Accepts the display names, EDIT_S/EDIT_A spellings, any letter case, and
// "SS" as an alias of rTSE (reported through `via_alias`).
std::optional<TaskMode> parse_mode(std::string_view name, bool * via_alias = nullptr);

// Identifier spelling, e.g. "DegradedSpeech"
std::string_view kind_name(ConditionKind kind);
// Display spelling, e.g. "Degraded Speech"
std::string_view kind_label(ConditionKind kind);
std::optional<ConditionKind> parse_kind(std::string_view name);
bool is_text_kind(ConditionKind kind);

// Ordered condition kinds a mode requires.
std::span<const ConditionKind> required_conditions(TaskMode mode);

// Task tokens sit right after PAD = K * d_max, so they never collide with a
// code or with PAD.
std::uint32_t task_token_id(TaskMode mode, std::uint32_t codebook_size, std::uint32_t max_duration);
TaskMode mode_from_token(std::uint32_t token, std::uint32_t codebook_size, std::uint32_t max_duration);

struct Condition {
    ConditionKind kind = ConditionKind::DegradedSpeech;
    std::variant<FeatureMatrix, std::string> payload;
};

// Embedding of audio conditions: stacked semantic proxy at the codec frame rate.
Condition audio_condition(ConditionKind kind, const Waveform & w, const CodecConfig & cfg);
Condition text_condition(ConditionKind kind, std::string text);

// Plug-in point for a real text encoder.
using TextEmbedder = std::function<FeatureMatrix(std::string_view)>;

inline constexpr std::size_t kHashEmbeddingDim = 64;

// One unit-norm row per whitespace-separated word, derived from the word's
// hash. Deterministic and dependency-free.
FeatureMatrix hash_text_embedding(std::string_view text);

struct ConditionSlot {
    ConditionKind kind = ConditionKind::DegradedSpeech;
    FeatureMatrix embedding;
    friend bool operator==(const ConditionSlot &, const ConditionSlot &) = default;
};

// Conditions in table order, then the task token, then the start of the
// generation region.
struct ConditioningSequence {
    TaskMode mode = TaskMode::SR;
    std::uint32_t task_token = 0;
    std::vector<ConditionSlot> conditions;
    bool generation_marker = true;
    friend bool operator==(const ConditioningSequence &, const ConditioningSequence &) = default;
};

// Throws ConditionMismatch unless the kinds equal the mode's row in order and
// each payload has the type its kind declares; EmptyCondition for blank text
// or frameless audio.
ConditioningSequence assemble(TaskMode mode, std::span<const Condition> conds, std::uint32_t codebook_size,
                              std::uint32_t max_duration, const TextEmbedder & embed = hash_text_embedding);

std::string serialize_sequence(const ConditioningSequence & seq);
ConditioningSequence parse_sequence(std::string_view json);

struct ModeRow {
    TaskMode mode = TaskMode::SR;
    std::string token_name;
    std::vector<ConditionKind> conditions;
};

std::vector<ModeRow> validate_table();
// Tab-separated audit listing: '#' comment lines, then one row per mode with
// its token id under the given code alphabet.
std::string format_table(const std::vector<ModeRow> & rows, std::uint32_t codebook_size, std::uint32_t max_duration);

// {"mode": "LASS", "conditions": [{"kind": "Caption", "text": ...}, {"kind": "MixtureAudio", "path": ...}]}
struct ManifestCondition {
    ConditionKind kind = ConditionKind::DegradedSpeech;
    std::optional<std::string> text;
    std::optional<std::string> path;
};

struct ConditionManifest {
    TaskMode mode = TaskMode::SR;
    bool mode_via_alias = false;
    std::vector<ManifestCondition> conditions;
};

ConditionManifest parse_manifest(std::string_view json);

} // namespace hcodec
