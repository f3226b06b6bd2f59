#include "cli.hpp"

#include "cli_config.hpp"

#include "hcodec/byte_io.hpp"
#include "hcodec/conditioning.hpp"
#include "hcodec/degrade.hpp"
#include "hcodec/dual_codec.hpp"
#include "hcodec/metrics.hpp"
#include "hcodec/rng.hpp"
#include "hcodec/tokenstore.hpp"
#include "hcodec/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

namespace hcodec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    CLI::Option * seed_opt = nullptr;
    bool dynamic = false;
    std::string mode;
    std::string task;
    std::size_t jobs = 1;
    bool quiet = false;
};

struct InputFile {
    fs::path path;
    // path relative to the directory it was found in
    fs::path rel;
};

struct ItemResult {
    int code = kExitOk;
    std::string line;
};

void ensure_logger() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("hcodec");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
    });
}

bool has_ext(const fs::path & p, std::string_view ext) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e == ext;
}

std::vector<InputFile> collect(const std::vector<std::string> & inputs, std::string_view ext) {
    std::vector<InputFile> files;
    for (const std::string & in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<InputFile> found;
            for (const auto & entry : fs::recursive_directory_iterator(p)) {
                if (entry.is_regular_file() && has_ext(entry.path(), ext)) {
                    found.push_back({entry.path(), fs::relative(entry.path(), p)});
                }
            }
            std::sort(found.begin(), found.end(), [](const auto & a, const auto & b) { return a.rel < b.rel; });
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::exists(p)) {
            files.push_back({p, p.filename()});
        } else {
            throw Error(Errc::IoError, "no such file or directory: " + in);
        }
    }
    return files;
}

// Runs fn(i) for i < n on up to `jobs` threads; results keep input order.
template <class Fn>
std::vector<ItemResult> parallel_items(std::size_t n, std::size_t jobs, Fn fn) {
    std::vector<ItemResult> results(n);
    auto guarded = [&](std::size_t i) {
        try {
            results[i] = fn(i);
        } catch (const Error & e) {
            results[i] = {exit_code_for(e.code()), std::string("error: ") + e.what()};
        } catch (const std::exception & e) {
            results[i] = {kExitInvariant, std::string("internal error: ") + e.what()};
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            guarded(i);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                guarded(i);
            }
        });
    }
    pool.clear();
    return results;
}

int report_items(const std::vector<ItemResult> & results, std::ostream & out) {
    int worst = kExitOk;
    for (const ItemResult & r : results) {
        if (r.code != kExitOk) {
            spdlog::error("{}", r.line);
            worst = std::max(worst, r.code);
        } else if (!r.line.empty()) {
            out << r.line << '\n';
        }
    }
    return worst;
}

// Without --config, commands that read codebooks start from the config.json
// that train left next to them.
RunConfig resolve(const Globals & g, const fs::path & codebook_dir = {}) {
    RunConfig cfg = default_run_config();
    if (!g.config_path.empty()) {
        cfg = load_run_config(g.config_path);
    } else if (!codebook_dir.empty() && fs::exists(codebook_dir / "config.json")) {
        cfg = load_run_config(codebook_dir / "config.json");
    }
    if (g.seed_opt && g.seed_opt->count() > 0) {
        cfg.seed = g.seed;
    }
    if (g.dynamic || g.mode == "dynamic") {
        cfg.dynamic = true;
    } else if (g.mode == "static") {
        cfg.dynamic = false;
    }
    if (!g.task.empty()) {
        bool alias = false;
        const auto mode = parse_mode(g.task, &alias);
        if (!mode) {
            throw Error(Errc::InvalidConfig, "unknown task " + g.task);
        }
        if (alias) {
            spdlog::warn("task {} is treated as an alias of rTSE", g.task);
        }
        cfg.chain = with_mode(cfg.chain, *mode);
    }
    cfg.chain.seed = cfg.seed;
    cfg.resolved_codec().validate();
    spdlog::info("resolved config:\n{}", run_config_to_json(cfg));
    return cfg;
}

Waveform read_input_wav(const fs::path & path, std::uint32_t expected_rate) {
    Waveform w = read_wav(path);
    if (w.sample_rate != expected_rate) {
        throw Error(Errc::UnsupportedFormat, path.string() + " is at " + std::to_string(w.sample_rate) +
                                                 " Hz, codec runs at " + std::to_string(expected_rate) + " Hz");
    }
    return w;
}

CodecStacks load_stacks(const fs::path & dir) {
    CodecStacks s;
    s.acoustic = load_codebooks(dir / "acoustic.hcbk");
    s.semantic = load_codebooks(dir / "semantic.hcbk");
    if (s.acoustic.stream != Stream::Acoustic || s.semantic.stream != Stream::Semantic) {
        throw Error(Errc::CodecMismatch, "codebook files hold the wrong stream");
    }
    return s;
}

void write_text(const fs::path & path, std::string_view text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
}

std::string read_text(const fs::path & path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

std::string fmt_num(double v) {
    return fmt::format("{:.6g}", v);
}

json layer_report(const RvqTrainReport & r) {
    return {{"residual_energy", r.residual_energy}, {"reseeded", r.reseeded_per_layer}};
}

bool non_increasing(const std::vector<double> & v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[i - 1]) {
            return false;
        }
    }
    return true;
}

int cmd_train(const Globals & g, const std::vector<std::string> & inputs, const std::string & out_dir,
              std::ostream & out) {
    const RunConfig cfg = resolve(g);
    const CodecConfig codec = cfg.resolved_codec();
    const auto files = collect(inputs, ".wav");
    if (files.empty()) {
        throw Error(Errc::EmptyInput, "no .wav files in the training corpus");
    }
    std::vector<Waveform> corpus;
    for (const InputFile & f : files) {
        corpus.push_back(read_input_wav(f.path, codec.sample_rate));
    }
    CodecTrainOptions opts;
    opts.seed = cfg.seed;
    opts.iters = cfg.train_iters;
    opts.ema_passes = cfg.train_ema_passes;
    CodecTrainReport report;
    const CodecStacks stacks = train_codec(corpus, codec, opts, &report);

    fs::create_directories(out_dir);
    save_codebooks(fs::path(out_dir) / "acoustic.hcbk", stacks.acoustic);
    save_codebooks(fs::path(out_dir) / "semantic.hcbk", stacks.semantic);
    const json rep{{"clips", files.size()},
                   {"frames", report.frames},
                   {"acoustic", layer_report(report.acoustic)},
                   {"semantic", layer_report(report.semantic)}};
    write_text(fs::path(out_dir) / "train_report.json", rep.dump(2));
    write_text(fs::path(out_dir) / "config.json", run_config_to_json(cfg));

    for (const auto & [name, r] : {std::pair{"acoustic", &report.acoustic}, std::pair{"semantic", &report.semantic}}) {
        std::string line = fmt::format("{}\tframes={}\tresidual_energy=", name, report.frames);
        for (std::size_t i = 0; i < r->residual_energy.size(); ++i) {
            line += (i ? "," : "") + fmt_num(r->residual_energy[i]);
        }
        out << line << '\n';
    }
    if (!non_increasing(report.acoustic.residual_energy) || !non_increasing(report.semantic.residual_energy)) {
        spdlog::error("residual energy increased with depth");
        return kExitInvariant;
    }
    return kExitOk;
}

int cmd_encode(const Globals & g, const std::vector<std::string> & inputs, const std::string & codebooks,
               const std::string & out_dir, std::ostream & out) {
    const RunConfig cfg = resolve(g, codebooks);
    const CodecConfig codec = cfg.resolved_codec();
    const CodecStacks stacks = load_stacks(codebooks);
    const auto files = collect(inputs, ".wav");
    fs::create_directories(out_dir);
    auto results = parallel_items(files.size(), g.jobs, [&](std::size_t i) {
        const InputFile & f = files[i];
        const Waveform w = read_input_wav(f.path, codec.sample_rate);
        const EncodedAudio enc = encode(w, codec, stacks);
        fs::path dst = fs::path(out_dir) / f.rel;
        dst.replace_extension(".htok");
        fs::create_directories(dst.parent_path());
        save_tokens(dst, enc);
        const Waveform y = decode(enc, codec, stacks);
        const RateReport r = rate_report(enc);
        return ItemResult{kExitOk, fmt::format("{}\tframes={}\tfps_effective={}\tbps={}\tbps_duration_aware={}\t"
                                               "stft_loss={}\tmel_loss={}",
                                               f.path.string(), enc.frames(), fmt_num(r.fps_effective),
                                               fmt_num(r.bps_simple), fmt_num(r.bps_duration_aware),
                                               fmt_num(stft_loss(w, y)), fmt_num(mel_loss(w, y)))};
    });
    return report_items(results, out);
}

int cmd_decode(const Globals & g, const std::vector<std::string> & inputs, const std::string & codebooks,
               const std::string & out_dir, std::ostream & out) {
    RunConfig cfg = resolve(g, codebooks);
    const CodecStacks stacks = load_stacks(codebooks);
    const auto files = collect(inputs, ".htok");
    fs::create_directories(out_dir);
    auto results = parallel_items(files.size(), g.jobs, [&](std::size_t i) {
        const InputFile & f = files[i];
        const EncodedAudio enc = load_tokens(f.path);
        RunConfig local = cfg;
        // the token header decides whether durations are present
        local.dynamic = enc.partition.has_value();
        const Waveform y = decode(enc, local.resolved_codec(), stacks);
        fs::path dst = fs::path(out_dir) / f.rel;
        dst.replace_extension(".wav");
        fs::create_directories(dst.parent_path());
        write_wav(dst, y);
        return ItemResult{kExitOk, fmt::format("{}\t{}\tsamples={}", f.path.string(), dst.string(), y.size())};
    });
    return report_items(results, out);
}

std::vector<Waveform> load_pool(const fs::path & dir) {
    std::vector<Waveform> pool;
    if (!fs::is_directory(dir)) {
        return pool;
    }
    for (const InputFile & f : collect({dir.string()}, ".wav")) {
        pool.push_back(read_wav(f.path));
    }
    return pool;
}

Assets load_assets(const std::string & dir) {
    Assets a;
    if (dir.empty()) {
        return a;
    }
    if (!fs::is_directory(dir)) {
        throw Error(Errc::AssetMissing, "asset directory " + dir + " does not exist");
    }
    a.noise = load_pool(fs::path(dir) / "noise");
    a.rir = load_pool(fs::path(dir) / "rir");
    a.interferer = load_pool(fs::path(dir) / "interferer");
    return a;
}

// Keeps PCM16 output from wrapping; the factor depends only on the signal.
Waveform fit_pcm(Waveform w) {
    double peak = 0.0;
    for (double v : w.samples) {
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 1.0) {
        const double scale = 0.999 / peak;
        for (double & v : w.samples) {
            v *= scale;
        }
    }
    return w;
}

std::string ops_summary(const ChainPlan & plan) {
    std::string s;
    for (const AppliedDistortion & op : plan.ops) {
        s += (s.empty() ? "" : "+") + std::string(distortion_name(op.kind));
    }
    return s.empty() ? "none" : s;
}

int cmd_degrade(const Globals & g, const std::vector<std::string> & inputs, const std::string & out_dir,
                const std::string & assets_dir, const std::string & replay, std::ostream & out) {
    const RunConfig cfg = resolve(g);
    const Assets assets = load_assets(assets_dir);
    fs::create_directories(out_dir);

    struct Job {
        fs::path clean;
        fs::path degraded_rel;
        std::optional<ChainPlan> plan;
    };
    std::vector<Job> jobs;
    if (!replay.empty()) {
        const auto rows = parse_csv(read_text(replay));
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() != 4) {
                throw Error(Errc::CorruptFile, "manifest row " + std::to_string(r) + " does not have 4 columns");
            }
            jobs.push_back({rows[r][0], rows[r][1], plan_from_json(rows[r][3])});
        }
    } else {
        for (const InputFile & f : collect(inputs, ".wav")) {
            jobs.push_back({f.path, fs::path("degraded") / f.rel, std::nullopt});
        }
    }

    std::vector<std::string> rows(jobs.size());
    auto results = parallel_items(jobs.size(), g.jobs, [&](std::size_t i) {
        const Job & job = jobs[i];
        const Waveform w = read_wav(job.clean);
        ChainPlan plan;
        if (job.plan) {
            plan = *job.plan;
        } else {
            ChainConfig chain = cfg.chain;
            chain.seed = derive_seed(cfg.seed, fnv1a64(job.degraded_rel.generic_string()));
            plan = plan_chain(chain, assets);
        }
        const Waveform y = fit_pcm(apply_plan(w, plan, assets));
        const fs::path dst = fs::path(out_dir) / job.degraded_rel;
        fs::create_directories(dst.parent_path());
        write_wav(dst, y);
        rows[i] = csv_field(job.clean.string()) + "," + csv_field(job.degraded_rel.generic_string()) + "," +
                  csv_field(ops_summary(plan)) + "," + csv_field(plan_to_json(plan));
        return ItemResult{kExitOk, fmt::format("{}\t{}\t{}", job.clean.string(), dst.string(), ops_summary(plan))};
    });
    if (replay.empty()) {
        std::string manifest = "clean_path,degraded_path,applied_ops,params\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (results[i].code == kExitOk) {
                manifest += rows[i] + "\n";
            }
        }
        write_text(fs::path(out_dir) / "manifest.csv", manifest);
    }
    return report_items(results, out);
}

struct EvalRow {
    std::string reference;
    std::string test;
    double stft = 0.0;
    double mel = 0.0;
    double snr = 0.0;
    std::optional<RateReport> rate;
};

EvalRow evaluate_pair(const std::string & ref_path, const std::string & test_path, const std::string & tokens) {
    EvalRow row;
    row.reference = ref_path;
    row.test = test_path;
    Waveform ref = read_wav(ref_path);
    Waveform test = read_wav(test_path);
    row.stft = stft_loss(ref, test);
    row.mel = mel_loss(ref, test);
    const std::size_t n = std::max(ref.size(), test.size());
    ref.samples.resize(n, 0.0);
    test.samples.resize(n, 0.0);
    row.snr = snr_db(ref, test);
    if (!tokens.empty()) {
        row.rate = rate_report(load_tokens(tokens));
    }
    return row;
}

std::string eval_csv_row(const EvalRow & r) {
    std::string s = csv_field(r.reference) + "," + csv_field(r.test) + "," + fmt_num(r.stft) + "," + fmt_num(r.mel) +
                    "," + fmt_num(r.snr) + ",";
    if (r.rate) {
        s += fmt_num(r.rate->fps_effective) + "," + fmt_num(r.rate->bps_simple) + "," +
             fmt_num(r.rate->bps_duration_aware);
    } else {
        s += ",,";
    }
    return s;
}

json eval_json_row(const EvalRow & r) {
    json j{{"reference", r.reference}, {"test", r.test}, {"stft_loss", r.stft}, {"mel_loss", r.mel}, {"snr_db", r.snr}};
    if (r.rate) {
        j["fps_effective"] = r.rate->fps_effective;
        j["bps_simple"] = r.rate->bps_simple;
        j["bps_duration_aware"] = r.rate->bps_duration_aware;
    }
    return j;
}

int cmd_eval(const Globals & g, const std::vector<std::string> & inputs, const std::string & pairs_csv,
             const std::string & tokens, const std::string & out_csv, const std::string & out_json,
             std::ostream & out) {
    resolve(g);
    struct Pair {
        std::string ref, test, tokens;
    };
    std::vector<Pair> pairs;
    if (!pairs_csv.empty()) {
        const auto rows = parse_csv(read_text(pairs_csv));
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() < 2) {
                throw Error(Errc::CorruptFile, "pairs row " + std::to_string(r) + " needs reference,test");
            }
            pairs.push_back({rows[r][0], rows[r][1], rows[r].size() > 2 ? rows[r][2] : ""});
        }
    } else {
        if (inputs.size() != 2) {
            throw Error(Errc::InvalidConfig, "eval takes a reference and a test file, or --pairs");
        }
        pairs.push_back({inputs[0], inputs[1], tokens});
    }

    std::vector<EvalRow> rows(pairs.size());
    auto results = parallel_items(pairs.size(), g.jobs, [&](std::size_t i) {
        rows[i] = evaluate_pair(pairs[i].ref, pairs[i].test, pairs[i].tokens);
        return ItemResult{};
    });

    std::string csv = "reference,test,stft_loss,mel_loss,snr_db,fps_effective,bps_simple,bps_duration_aware\n";
    json report{{"pairs", json::array()}};
    EvalRow mean;
    mean.reference = "mean";
    RateReport mean_rate;
    std::size_t ok = 0;
    std::size_t with_rate = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (results[i].code != kExitOk) {
            continue;
        }
        const EvalRow & r = rows[i];
        csv += eval_csv_row(r) + "\n";
        report["pairs"].push_back(eval_json_row(r));
        ++ok;
        mean.stft += r.stft;
        mean.mel += r.mel;
        mean.snr += r.snr;
        if (r.rate) {
            ++with_rate;
            mean_rate.fps_effective += r.rate->fps_effective;
            mean_rate.bps_simple += r.rate->bps_simple;
            mean_rate.bps_duration_aware += r.rate->bps_duration_aware;
        }
    }
    if (ok > 0) {
        mean.stft /= ok;
        mean.mel /= ok;
        mean.snr /= ok;
        if (with_rate > 0) {
            mean_rate.fps_effective /= with_rate;
            mean_rate.bps_simple /= with_rate;
            mean_rate.bps_duration_aware /= with_rate;
            mean.rate = mean_rate;
        }
        csv += eval_csv_row(mean) + "\n";
        report["aggregate"] = eval_json_row(mean);
    }
    if (out_csv.empty()) {
        out << csv;
    } else {
        write_text(out_csv, csv);
    }
    if (!out_json.empty()) {
        write_text(out_json, report.dump(2));
    }
    return report_items(results, out);
}

int cmd_inspect(const std::string & path, std::ostream & out) {
    const auto bytes = read_file_bytes(path);
    const std::string magic(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, bytes.size())));
    json j;
    if (magic == "HTOK") {
        const EncodedAudio enc = read_tokens(bytes);
        const RateReport r = rate_report(enc);
        j = {{"format", "HTOK"},
             {"sample_rate", enc.sample_rate},
             {"fps", {enc.fps.num, enc.fps.den}},
             {"codebook_size", enc.codebook_size},
             {"max_duration", enc.max_duration},
             {"nq_acoustic", enc.acoustic.layers},
             {"nq_semantic", enc.semantic.layers},
             {"dynamic", enc.partition.has_value()},
             {"original_len", enc.original_len},
             {"frames", enc.frames()},
             {"fingerprint", fmt::format("{:016x}", enc.fingerprint)},
             {"fps_effective", r.fps_effective},
             {"bps_simple", r.bps_simple},
             {"bps_duration_aware", r.bps_duration_aware}};
        if (enc.partition) {
            j["durations"] = enc.partition->durations;
        }
    } else if (magic == "HCBK") {
        const RvqStack s = read_codebooks(bytes);
        j = {{"format", "HCBK"},
             {"stream", stream_name(s.stream)},
             {"layers", s.num_layers()},
             {"codebook_size", s.codebook_size()},
             {"dim", s.dim()},
             {"fingerprint", fmt::format("{:016x}", s.fingerprint())}};
    } else if (magic == "HFEA") {
        const FeatureMatrix f = read_features(bytes);
        j = {{"format", "HFEA"}, {"frames", f.frames()}, {"dims", f.dims()}, {"fps", {f.fps().num, f.fps().den}}};
    } else if (magic == "RIFF") {
        const Waveform w = parse_wav(bytes);
        j = {{"format", "WAV"}, {"sample_rate", w.sample_rate}, {"samples", w.size()}, {"seconds", w.seconds()}};
    } else {
        throw Error(Errc::NotATokenFile, "unrecognised file magic", 0);
    }
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_modes(const Globals & g, const std::string & manifest_path, std::ostream & out) {
    const RunConfig cfg = resolve(g);
    const CodecConfig codec = cfg.resolved_codec();
    const auto k = static_cast<std::uint32_t>(codec.codebook_size);
    const std::uint32_t dmax = codec.max_duration();
    if (manifest_path.empty()) {
        out << format_table(validate_table(), k, dmax);
        return kExitOk;
    }
    const ConditionManifest m = parse_manifest(read_text(manifest_path));
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<Condition> conds;
    for (const ManifestCondition & c : m.conditions) {
        if (c.text) {
            conds.push_back(text_condition(c.kind, *c.text));
        } else {
            const fs::path p = fs::path(*c.path).is_absolute() ? fs::path(*c.path) : base / *c.path;
            conds.push_back(audio_condition(c.kind, read_input_wav(p, codec.sample_rate), codec));
        }
    }
    const ConditioningSequence seq = assemble(m.mode, conds, k, dmax);
    if (m.mode_via_alias) {
        out << "# mode SS resolved as an alias of rTSE\n";
    }
    out << "mode\t" << mode_name(seq.mode) << "\ttask_token\t" << seq.task_token << '\n';
    for (const ConditionSlot & s : seq.conditions) {
        out << kind_name(s.kind) << '\t' << s.embedding.frames() << 'x' << s.embedding.dims() << '\n';
    }
    return kExitOk;
}

} // namespace

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::InvalidConfig:
        case Errc::CodecMismatch:
        case Errc::ShapeMismatch:
        case Errc::NotTrained:
            return kExitMismatch;
        default:
            return kExitInput;
    }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) {
        throw Error(Errc::CorruptFile, "unterminated quote in csv", text.size());
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(value);
    }
    std::string s = "\"";
    for (char c : value) {
        s += c;
        if (c == '"') {
            s += '"';
        }
    }
    return s + "\"";
}

int run(int argc, const char * const * argv, std::ostream & out) {
    ensure_logger();
    Globals g;
    CLI::App app{"Dual-stream audio tokenizer toolkit", "hcodec"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
    g.seed_opt = app.add_option("--seed", g.seed, "master seed for every random draw");
    app.add_flag("--dynamic", g.dynamic, "enable dynamic frame aggregation");
    app.add_option("--mode", g.mode, "static or dynamic")->check(CLI::IsMember({"static", "dynamic"}));
    app.add_option("--task", g.task, "operational mode for the degradation chain (SR, TSE, rTSE, LASS, ...)");
    app.add_option("--jobs", g.jobs, "parallel workers for batch commands")->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", g.quiet, "only log warnings and errors");

    std::vector<std::string> inputs;
    std::string out_path, codebooks, assets, replay, pairs, tokens, json_path, manifest;

    auto * train = app.add_subcommand("train", "train acoustic and semantic codebooks on a wav corpus");
    train->add_option("inputs", inputs, "wav files or directories")->required();
    train->add_option("-o,--out", out_path, "output directory")->required();

    auto * enc = app.add_subcommand("encode", "encode wav files to token files");
    enc->add_option("inputs", inputs, "wav files or directories")->required();
    enc->add_option("--codebooks", codebooks, "directory with acoustic.hcbk and semantic.hcbk")->required();
    enc->add_option("-o,--out", out_path, "output directory")->required();

    auto * dec = app.add_subcommand("decode", "decode token files to wav");
    dec->add_option("inputs", inputs, "token files or directories")->required();
    dec->add_option("--codebooks", codebooks, "directory with acoustic.hcbk and semantic.hcbk")->required();
    dec->add_option("-o,--out", out_path, "output directory")->required();

    auto * deg = app.add_subcommand("degrade", "simulate degraded copies of a clean corpus");
    deg->add_option("inputs", inputs, "clean wav files or directories");
    deg->add_option("-o,--out", out_path, "output directory")->required();
    deg->add_option("--assets", assets, "directory with noise/, rir/ and interferer/ wav pools");
    deg->add_option("--replay", replay, "re-run the plans recorded in a manifest.csv")->check(CLI::ExistingFile);

    auto * ev = app.add_subcommand("eval", "spectral losses, SNR and rates for reference/test pairs");
    ev->add_option("inputs", inputs, "reference.wav test.wav");
    ev->add_option("--pairs", pairs, "csv with reference,test[,tokens] columns")->check(CLI::ExistingFile);
    ev->add_option("--tokens", tokens, "token file of the test signal, adds rate columns");
    ev->add_option("-o,--out", out_path, "write the csv here instead of stdout");
    ev->add_option("--json", json_path, "also write a json report");

    auto * ins = app.add_subcommand("inspect", "describe a token, codebook, feature or wav file");
    ins->add_option("file", out_path, "file to inspect")->required();

    auto * modes = app.add_subcommand("modes", "print the operational mode table");
    modes->add_option("--manifest", manifest, "assemble a conditioning manifest instead")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError & e) {
        const int code = app.exit(e, out, out);
        return code == 0 ? kExitOk : kExitInput;
    }
    spdlog::set_level(g.quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*train) return cmd_train(g, inputs, out_path, out);
        if (*enc) return cmd_encode(g, inputs, codebooks, out_path, out);
        if (*dec) return cmd_decode(g, inputs, codebooks, out_path, out);
        if (*deg) {
            if (inputs.empty() == replay.empty()) {
                throw Error(Errc::InvalidConfig, "degrade takes either clean inputs or --replay");
            }
            return cmd_degrade(g, inputs, out_path, assets, replay, out);
        }
        if (*ev) return cmd_eval(g, inputs, pairs, tokens, out_path, json_path, out);
        if (*ins) return cmd_inspect(out_path, out);
        if (*modes) return cmd_modes(g, manifest, out);
    } catch (const Error & e) {
        spdlog::error("{}: {}", errc_name(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception & e) {
        spdlog::error("internal error: {}", e.what());
        return kExitInvariant;
    }
    return kExitInput;
}

int run(const std::vector<std::string> & args, std::ostream & out) {
    std::vector<const char *> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("hcodec");
    for (const std::string & a : args) {
        argv.push_back(a.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data(), out);
}

} // namespace hcodec::cli
