#include "cli_config.hpp"

#include "hcodec/byte_io.hpp"
#include "hcodec/error.hpp"

#include <json.hpp>

namespace hcodec::cli {

using nlohmann::json;

CodecConfig RunConfig::resolved_codec() const {
    CodecConfig c = codec;
    c.dynamic.reset();
    if (dynamic) {
        c.dynamic = aggregation;
    }
    return c;
}

RunConfig default_run_config() {
    return RunConfig{};
}

RunConfig run_config_from_json(std::string_view text) {
    RunConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception & e) {
        throw Error(Errc::InvalidConfig, std::string("config json: ") + e.what());
    }
    try {
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("codec")) {
            const json & c = j.at("codec");
            CodecConfig & k = cfg.codec;
            k.sample_rate = c.value("sample_rate", k.sample_rate);
            k.stft.frame_length = c.value("frame_length", k.stft.frame_length);
            k.stft.hop_length = c.value("hop_length", k.stft.hop_length);
            k.stack_factor = c.value("stack_factor", k.stack_factor);
            k.nq_acoustic = c.value("nq_acoustic", k.nq_acoustic);
            k.nq_semantic = c.value("nq_semantic", k.nq_semantic);
            k.codebook_size = c.value("codebook_size", k.codebook_size);
            k.proxy_mels = c.value("proxy_mels", k.proxy_mels);
            k.proxy_smoothing = c.value("proxy_smoothing", k.proxy_smoothing);
            const std::string src = c.value("semantic_source", std::string("proxy"));
            if (src == "proxy") {
                k.semantic_source = SemanticSource::Proxy;
            } else if (src == "external") {
                k.semantic_source = SemanticSource::External;
            } else {
                throw Error(Errc::InvalidConfig, "semantic_source must be proxy or external");
            }
        }
        if (j.contains("dynamic")) {
            const json & d = j.at("dynamic");
            cfg.dynamic = d.value("enabled", cfg.dynamic);
            cfg.aggregation.threshold = d.value("threshold", cfg.aggregation.threshold);
            cfg.aggregation.max_duration = d.value("max_duration", cfg.aggregation.max_duration);
            cfg.aggregation.window = d.value("window", cfg.aggregation.window);
        }
        if (j.contains("train")) {
            const json & t = j.at("train");
            cfg.train_iters = t.value("iters", cfg.train_iters);
            cfg.train_ema_passes = t.value("ema_passes", cfg.train_ema_passes);
        }
        if (j.contains("degrade")) {
            cfg.chain = chain_config_from_json(j.at("degrade").dump());
        }
    } catch (const json::exception & e) {
        throw Error(Errc::InvalidConfig, std::string("config field: ") + e.what());
    }
    cfg.aggregation.validate();
    cfg.codec.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path & path) {
    const auto bytes = read_file_bytes(path);
    return run_config_from_json(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

std::string run_config_to_json(const RunConfig & cfg) {
    const CodecConfig & k = cfg.codec;
    json j;
    j["seed"] = cfg.seed;
    j["codec"] = {{"sample_rate", k.sample_rate},
                  {"frame_length", k.stft.frame_length},
                  {"hop_length", k.stft.hop_length},
                  {"stack_factor", k.stack_factor},
                  {"nq_acoustic", k.nq_acoustic},
                  {"nq_semantic", k.nq_semantic},
                  {"codebook_size", k.codebook_size},
                  {"semantic_source", k.semantic_source == SemanticSource::Proxy ? "proxy" : "external"},
                  {"proxy_mels", k.proxy_mels},
                  {"proxy_smoothing", k.proxy_smoothing}};
    j["dynamic"] = {{"enabled", cfg.dynamic},
                    {"threshold", cfg.aggregation.threshold},
                    {"max_duration", cfg.aggregation.max_duration},
                    {"window", cfg.aggregation.window}};
    j["train"] = {{"iters", cfg.train_iters}, {"ema_passes", cfg.train_ema_passes}};
    j["degrade"] = json::parse(chain_config_to_json(cfg.chain));
    return j.dump(2);
}

} // namespace hcodec::cli
