#include "embedhalluc/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "embedhalluc/errors.hpp"

namespace embedhalluc::harness {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where(key) + " has the wrong type");
        }
    }

    template <typename Enum, typename Parse>
    void get_enum(const std::string& key, Enum& out, Parse parse) {
        std::string text;
        get(key, text);
        if (text.empty()) return;
        try {
            out = parse(text);
        } catch (const Error& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    void get_path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
        std::string text;
        get(key, text);
        if (text.empty()) return;
        std::filesystem::path p(text);
        out = p.is_absolute() || base.empty() ? p : base / p;
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(j_.at(key), path_.empty() ? key : path_ + "." + key);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError("unknown key " + where(key));
        }
    }

private:
    std::string where(const std::string& key = {}) const {
        std::string p = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
        return p.empty() ? "config" : "'" + p + "'";
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_synthetic(Reader r, data::SyntheticSpec& s) {
    r.get("name", s.name);
    r.get("num_classes", s.num_classes);
    r.get("vocab_size", s.vocab_size);
    r.get("overlap", s.overlap);
    r.get("class_token_distributions", s.class_token_distributions);
    r.get("min_len", s.min_len);
    r.get("max_len", s.max_len);
    r.get("size", s.size);
    r.get("seed", s.seed);
    r.get("synonyms_per_word", s.synonyms_per_word);
    r.get("embedding_dim", s.embedding_dim);
    r.get("embedding_spread", s.embedding_spread);
    r.finish();
}

void read_task(Reader r, TaskSource& t, const std::filesystem::path& base) {
    if (r.has("synthetic")) {
        data::SyntheticSpec spec;
        read_synthetic(r.child("synthetic"), spec);
        t.synthetic = spec;
    }
    r.get_path("dataset", t.dataset_path, base);
    r.get_path("synonyms", t.synonyms_path, base);
    r.get_path("embeddings", t.embeddings_path, base);
    if (r.has("schema")) {
        Reader s = r.child("schema");
        s.get("name", t.schema.name);
        s.get_enum("kind", t.schema.kind, data::parse_task_kind);
        s.get("labels", t.schema.labels);
        s.get_enum("metric", t.schema.metric, data::parse_metric_kind);
        s.finish();
    }
    r.finish();
    if (t.synthetic && !t.dataset_path.empty()) throw ConfigError("'task' takes either 'synthetic' or 'dataset', not both");
}

void read_learner(Reader r, learner::LearnerConfig& c) {
    r.get("embed_dim", c.embed_dim);
    r.get("max_len", c.max_len);
    r.get("num_blocks", c.num_blocks);
    r.get("ffn_dim", c.ffn_dim);
    r.get_enum("encoder", c.encoder, learner::parse_encoder_kind);
    r.get("embedding_stddev", c.embedding_stddev);
    r.get("head_stddev", c.head_stddev);
    r.finish();
}

void read_finetune(Reader r, learner::FinetuneConfig& c) {
    r.get("max_steps", c.max_steps);
    r.get("real_lr", c.real_lr);
    r.get("halluc_lr", c.halluc_lr);
    r.get("real_batch", c.real_batch);
    r.get("halluc_batch", c.halluc_batch);
    r.get("eval_interval", c.eval_interval);
    r.get("label_calibration", c.label_calibration);
    r.get_enum("loss_combination", c.loss_combination, learner::parse_loss_combination);
    r.get("select_teacher_by_validation", c.select_teacher_by_validation);
    r.get("beta1", c.beta1);
    r.get("beta2", c.beta2);
    r.get("adam_eps", c.adam_eps);
    r.finish();
}

void read_generator(Reader r, halluc::GeneratorConfig& c) {
    r.get("noise_dim", c.noise_dim);
    r.get("hidden_dims", c.hidden_dims);
    r.get("leaky_slope", c.leaky_slope);
    r.finish();
}

void read_critic(Reader r, halluc::CriticConfig& c) {
    r.get("hidden_dims", c.hidden_dims);
    r.get_enum("norm", c.norm, halluc::parse_norm_kind);
    r.get("conditioned", c.conditioned);
    r.get("leaky_slope", c.leaky_slope);
    r.finish();
}

void read_halluc(Reader r, halluc::HallucTrainConfig& c) {
    r.get("epochs", c.epochs);
    r.get("batch_size", c.batch_size);
    r.get("lr", c.lr);
    r.get("beta1", c.beta1);
    r.get("beta2", c.beta2);
    r.get("gp_weight", c.gp_weight);
    r.get("critic_steps", c.critic_steps);
    r.finish();
}

void read_eda(Reader r, augment::EdaParams& e) {
    r.get("alpha", e.alpha);
    std::vector<std::string> ops;
    r.get("ops", ops);
    if (!ops.empty()) {
        e.ops.clear();
        for (const auto& op : ops) {
            try {
                e.ops.push_back(augment::parse_eda_op(op));
            } catch (const Error& err) {
                throw ConfigError(std::string("'eda.ops': ") + err.what());
            }
        }
    }
    r.finish();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    Reader r(j, "");
    if (r.has("task")) read_task(r.child("task"), cfg.task, base_dir);
    r.get_enum("method", cfg.method, parse_method);
    r.get("seeds", cfg.seeds);
    if (r.has("split")) {
        Reader s = r.child("split");
        s.get("train_per_class", cfg.split.train_per_class);
        s.get("validation_per_class", cfg.split.validation_per_class);
        s.get("pool_per_class", cfg.split.pool_per_class);
        s.get("require_pool", cfg.split.require_pool);
        s.finish();
    }
    if (r.has("learner")) read_learner(r.child("learner"), cfg.learner);
    if (r.has("finetune")) read_finetune(r.child("finetune"), cfg.finetune);
    r.get("lr_grid", cfg.lr_grid);
    r.get("batch_grid", cfg.batch_grid);
    r.get("baseline_lr_grid", cfg.baseline_lr_grid);
    r.get("lr_scale", cfg.lr_scale);
    if (r.has("generator")) read_generator(r.child("generator"), cfg.generator);
    if (r.has("critic")) read_critic(r.child("critic"), cfg.critic);
    if (r.has("hallucinator")) read_halluc(r.child("hallucinator"), cfg.halluc);
    if (r.has("eda")) read_eda(r.child("eda"), cfg.eda);
    r.get("eda_variants", cfg.eda_variants);
    r.get("select_by_task_metric", cfg.select_by_task_metric);
    r.get_path("output_dir", cfg.output_dir, base_dir);
    r.get("threads", cfg.threads);
    r.finish();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    json task = json::object();
    if (cfg.task.synthetic) {
        const auto& s = *cfg.task.synthetic;
        task["synthetic"] = {{"name", s.name},           {"num_classes", s.num_classes},
                             {"vocab_size", s.vocab_size}, {"overlap", s.overlap},
                             {"min_len", s.min_len},     {"max_len", s.max_len},
                             {"size", s.size},           {"seed", s.seed},
                             {"synonyms_per_word", s.synonyms_per_word},
                             {"embedding_dim", s.embedding_dim},
                             {"embedding_spread", s.embedding_spread}};
        if (!s.class_token_distributions.empty())
            task["synthetic"]["class_token_distributions"] = s.class_token_distributions;
    } else {
        task["dataset"] = cfg.task.dataset_path.string();
        task["schema"] = {{"name", cfg.task.schema.name},
                          {"kind", data::to_string(cfg.task.schema.kind)},
                          {"labels", cfg.task.schema.labels},
                          {"metric", data::to_string(cfg.task.schema.metric)}};
        if (!cfg.task.synonyms_path.empty()) task["synonyms"] = cfg.task.synonyms_path.string();
        if (!cfg.task.embeddings_path.empty()) task["embeddings"] = cfg.task.embeddings_path.string();
    }
    j["task"] = task;
    j["method"] = to_string(cfg.method);
    j["seeds"] = cfg.seeds;
    j["split"] = {{"train_per_class", cfg.split.train_per_class},
                  {"validation_per_class", cfg.split.validation_per_class},
                  {"pool_per_class", cfg.split.pool_per_class},
                  {"require_pool", cfg.split.require_pool}};
    const auto& l = cfg.learner;
    j["learner"] = {{"embed_dim", l.embed_dim},
                    {"max_len", l.max_len},
                    {"num_blocks", l.num_blocks},
                    {"ffn_dim", l.ffn_dim},
                    {"encoder", learner::to_string(l.encoder)},
                    {"embedding_stddev", l.embedding_stddev},
                    {"head_stddev", l.head_stddev}};
    const auto& f = cfg.finetune;
    j["finetune"] = {{"max_steps", f.max_steps},
                     {"real_lr", f.real_lr},
                     {"halluc_lr", f.halluc_lr},
                     {"real_batch", f.real_batch},
                     {"halluc_batch", f.halluc_batch},
                     {"eval_interval", f.eval_interval},
                     {"label_calibration", f.label_calibration},
                     {"loss_combination", learner::to_string(f.loss_combination)},
                     {"select_teacher_by_validation", f.select_teacher_by_validation},
                     {"beta1", f.beta1},
                     {"beta2", f.beta2},
                     {"adam_eps", f.adam_eps}};
    j["lr_grid"] = cfg.lr_grid;
    j["batch_grid"] = cfg.batch_grid;
    j["baseline_lr_grid"] = cfg.baseline_lr_grid;
    j["lr_scale"] = cfg.lr_scale;
    j["generator"] = {{"noise_dim", cfg.generator.noise_dim},
                      {"hidden_dims", cfg.generator.hidden_dims},
                      {"leaky_slope", cfg.generator.leaky_slope}};
    j["critic"] = {{"hidden_dims", cfg.critic.hidden_dims},
                   {"norm", halluc::to_string(cfg.critic.norm)},
                   {"conditioned", cfg.critic.conditioned},
                   {"leaky_slope", cfg.critic.leaky_slope}};
    const auto& h = cfg.halluc;
    j["hallucinator"] = {{"epochs", h.epochs},         {"batch_size", h.batch_size}, {"lr", h.lr},
                         {"beta1", h.beta1},           {"beta2", h.beta2},           {"gp_weight", h.gp_weight},
                         {"critic_steps", h.critic_steps}};
    std::vector<std::string> ops;
    for (auto op : cfg.eda.ops) ops.push_back(augment::to_string(op));
    j["eda"] = {{"alpha", cfg.eda.alpha}, {"ops", ops}};
    j["eda_variants"] = cfg.eda_variants;
    j["select_by_task_metric"] = cfg.select_by_task_metric;
    if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir.string();
    j["threads"] = cfg.threads;
    return j.dump(2) + "\n";
}

}  // namespace embedhalluc::harness
