#include "packetlm/config_io.hpp"

#include "packetlm/error.hpp"

namespace packetlm {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
    return json{{"n_layers", cfg.n_layers},     {"n_heads", cfg.n_heads},
                {"emb_size", cfg.emb_size},     {"seq_len", cfg.seq_len},
                {"mlp_ratio", cfg.mlp_ratio},   {"vocab_size", cfg.vocab_size},
                {"max_numeric_len", cfg.max_numeric_len}};
}

ModelConfig model_config_from_json(const json& j) {
    try {
        ModelConfig cfg;
        if (j.is_string()) {
            cfg = named_model_config(j.get<std::string>());
            return cfg;
        }
        if (j.contains("preset")) cfg = named_model_config(j.at("preset").get<std::string>());
        if (j.contains("n_layers")) cfg.n_layers = j.at("n_layers").get<int>();
        if (j.contains("n_heads")) cfg.n_heads = j.at("n_heads").get<int>();
        if (j.contains("emb_size")) cfg.emb_size = j.at("emb_size").get<int>();
        if (j.contains("seq_len")) cfg.seq_len = j.at("seq_len").get<int>();
        if (j.contains("mlp_ratio")) cfg.mlp_ratio = j.at("mlp_ratio").get<double>();
        if (j.contains("vocab_size")) cfg.vocab_size = j.at("vocab_size").get<int>();
        if (j.contains("max_numeric_len"))
            cfg.max_numeric_len = j.at("max_numeric_len").get<int>();
        return cfg;
    } catch (const json::exception& e) {
        fail(Errc::config_error, std::string("bad model config: ") + e.what());
    }
}

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"epochs", cfg.epochs},
                {"base_lr", cfg.base_lr},
                {"batch_size", cfg.batch_size},
                {"warmup_steps", cfg.warmup_steps},
                {"min_lr", cfg.min_lr},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2},
                {"adam_eps", cfg.adam_eps},
                {"seed", cfg.seed},
                {"model", model_config_to_json(cfg.model)}};
}

TrainConfig train_config_from_json(const json& j) {
    try {
        TrainConfig cfg;
        if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
        if (j.contains("base_lr")) cfg.base_lr = j.at("base_lr").get<double>();
        if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
        if (j.contains("warmup_steps")) cfg.warmup_steps = j.at("warmup_steps").get<int>();
        if (j.contains("min_lr")) cfg.min_lr = j.at("min_lr").get<double>();
        if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
        if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
        if (j.contains("adam_eps")) cfg.adam_eps = j.at("adam_eps").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
        if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
        return cfg;
    } catch (const json::exception& e) {
        fail(Errc::config_error, std::string("bad train config: ") + e.what());
    }
}

json schema_to_json(const PacketSchema& schema) {
    return json::parse(schema_to_json_text(schema));
}

PacketSchema schema_from_json(const json& j) {
    return schema_from_json_text(j.dump());
}

} // namespace packetlm
