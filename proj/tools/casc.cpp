#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "casc/casc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace casc;

static char const* toolkit_version = "0.1.0";

static std::string trim(std::string const& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    return s.substr(b, e - b + 1);
}

static std::vector<std::string> split_list(std::string const& s)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) {
            out.push_back(cur);
        }
    }
    return out;
}

static long parse_int(std::string const& key, std::string const& s)
{
    try {
        std::size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (std::exception const&) {
        throw config_error("bad integer for " + key + ": " + s);
    }
}

static double parse_real(std::string const& key, std::string const& s)
{
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (std::exception const&) {
        throw config_error("bad number for " + key + ": " + s);
    }
}

struct run_config {
    fs::path path;
    fs::path data_dir;
    fs::path out_dir;
    std::uint64_t seed = 1;
    int min_segment_frames = 1;
    int max_segment_frames = 30;
    std::vector<double> step_sizes { 0.01, 0.1, 1.0 };
    int max_epochs_level1 = 20;
    int max_epochs_level2 = 20;
    int patience = 0;
    std::vector<std::string> templates_level1 {
        "avg", "samples", "boundary", "length", "bias", "bias0" };
    std::vector<std::string> templates_level2 {
        "lattice_score", "lm_score", "boundary2", "length", "bias" };
    double lambda = 0.7;
    double lm_k = 1;
    fs::path lm_file;
    fs::path model1;
    int workers = 1;
    int synth_train = 8;
    int synth_dev = 1;
    int synth_test = 1;
    int synth_frames_min = 20;
    int synth_frames_max = 40;
    int synth_labels = 5;
    double synth_mean_segment = 5;
    int synth_max_segment = 10;
    double synth_sharpness = 1;
    double synth_transition_strength = 0;

    std::map<std::string, std::string> resolved;
};

static run_config load_config(fs::path const& path, bool synth_mode)
{
    std::ifstream is(path);
    if (!is) {
        throw config_error("cannot read config " + path.string());
    }
    run_config cfg;
    cfg.path = path;

    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("bad config line: " + line);
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        cfg.resolved[key] = value;

        if (key == "data_dir") {
            cfg.data_dir = value;
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "seed") {
            cfg.seed = std::uint64_t(parse_int(key, value));
        } else if (key == "min_segment_frames") {
            cfg.min_segment_frames = int(parse_int(key, value));
        } else if (key == "max_segment_frames") {
            cfg.max_segment_frames = int(parse_int(key, value));
        } else if (key == "step_sizes") {
            cfg.step_sizes.clear();
            for (auto& tok : split_list(value)) {
                cfg.step_sizes.push_back(parse_real(key, tok));
            }
        } else if (key == "max_epochs_level1") {
            cfg.max_epochs_level1 = int(parse_int(key, value));
        } else if (key == "max_epochs_level2") {
            cfg.max_epochs_level2 = int(parse_int(key, value));
        } else if (key == "patience") {
            cfg.patience = int(parse_int(key, value));
        } else if (key == "templates_level1") {
            cfg.templates_level1 = split_list(value);
        } else if (key == "templates_level2") {
            cfg.templates_level2 = split_list(value);
        } else if (key == "lambda") {
            cfg.lambda = parse_real(key, value);
        } else if (key == "lm_k") {
            cfg.lm_k = parse_real(key, value);
        } else if (key == "lm_file") {
            cfg.lm_file = value;
        } else if (key == "model1") {
            cfg.model1 = value;
        } else if (key == "workers") {
            cfg.workers = int(parse_int(key, value));
        } else if (key == "synth_train") {
            cfg.synth_train = int(parse_int(key, value));
        } else if (key == "synth_dev") {
            cfg.synth_dev = int(parse_int(key, value));
        } else if (key == "synth_test") {
            cfg.synth_test = int(parse_int(key, value));
        } else if (key == "synth_frames_min") {
            cfg.synth_frames_min = int(parse_int(key, value));
        } else if (key == "synth_frames_max") {
            cfg.synth_frames_max = int(parse_int(key, value));
        } else if (key == "synth_labels") {
            cfg.synth_labels = int(parse_int(key, value));
        } else if (key == "synth_mean_segment") {
            cfg.synth_mean_segment = parse_real(key, value);
        } else if (key == "synth_max_segment") {
            cfg.synth_max_segment = int(parse_int(key, value));
        } else if (key == "synth_sharpness") {
            cfg.synth_sharpness = parse_real(key, value);
        } else if (key == "synth_transition_strength") {
            cfg.synth_transition_strength = parse_real(key, value);
        } else {
            throw config_error("unknown config key: " + key);
        }
    }

    if (cfg.data_dir.empty()) {
        throw config_error("config is missing data_dir");
    }
    if (cfg.out_dir.empty()) {
        throw config_error("config is missing out_dir");
    }
    if (cfg.min_segment_frames < 1
            || cfg.max_segment_frames < cfg.min_segment_frames) {
        throw config_error("bad segment length bounds");
    }
    if (cfg.lambda < 0 || cfg.lambda > 1) {
        throw config_error("lambda must lie in [0, 1]");
    }
    if (cfg.lm_k < 0) {
        throw config_error("lm_k must be nonnegative");
    }
    if (cfg.workers < 1) {
        throw config_error("workers must be positive");
    }
    if (cfg.max_epochs_level1 < 1 || cfg.max_epochs_level2 < 1) {
        throw config_error("max_epochs must be at least 1");
    }
    if (cfg.patience < 0) {
        throw config_error("patience must be nonnegative");
    }
    if (cfg.step_sizes.empty()) {
        throw config_error("step_sizes must be non-empty");
    }
    for (double s : cfg.step_sizes) {
        if (s <= 0) {
            throw config_error("step sizes must be positive");
        }
    }
    if (!synth_mode && !fs::is_directory(cfg.data_dir)) {
        throw config_error("data_dir does not exist: " + cfg.data_dir.string());
    }
    if (!cfg.lm_file.empty() && !fs::is_regular_file(cfg.lm_file)) {
        throw config_error("lm_file does not exist: " + cfg.lm_file.string());
    }
    if (!cfg.model1.empty() && !fs::is_regular_file(cfg.model1)) {
        throw config_error("model1 does not exist: " + cfg.model1.string());
    }
    return cfg;
}

// Every file a subcommand creates is recorded here so a failure can
// sweep away partial outputs.
struct output_tracker {
    std::vector<fs::path> files;

    std::ofstream create(fs::path const& p)
    {
        fs::create_directories(p.parent_path());
        files.push_back(p);
        std::ofstream os(p);
        if (!os) {
            throw config_error("cannot write " + p.string());
        }
        return os;
    }

    void discard()
    {
        for (auto& p : files) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
};

static output_tracker outputs;

static void write_manifest(fs::path const& dir, std::string const& subcommand,
    run_config const* cfg, json const& flags, std::vector<std::string> const& inputs)
{
    json m;
    m["subcommand"] = subcommand;
    m["version"] = toolkit_version;
    m["flags"] = flags;
    m["inputs"] = inputs;
    if (cfg) {
        m["config_file"] = cfg->path.string();
        m["config"] = json(cfg->resolved);
        m["seed"] = cfg->seed;
    }
    auto os = outputs.create(dir / ("manifest_" + subcommand + ".json"));
    os << m.dump(2) << "\n";
}

struct corpus {
    label_set labels;
    std::vector<utterance_data> utts;   // all requested splits
    std::map<std::string, std::string> split_of;
};

static gold_segmentation read_gold_file(fs::path const& path,
    label_set const& labels)
{
    std::ifstream is(path);
    if (!is) {
        throw config_error("cannot read " + path.string());
    }
    gold_segmentation gold;
    std::string name;
    int start, end;
    while (is >> name >> start >> end) {
        if (!labels.has(name)) {
            throw parse_error("unknown label in " + path.string() + ": " + name);
        }
        gold.push_back({ labels.id(name), start, end });
    }
    return gold;
}

static corpus load_corpus(run_config const& cfg,
    std::set<std::string> const& splits)
{
    corpus c;
    {
        std::ifstream is(cfg.data_dir / "labels.txt");
        if (!is) {
            throw config_error("cannot read "
                + (cfg.data_dir / "labels.txt").string());
        }
        c.labels = load_labels(is);
    }

    std::ifstream index(cfg.data_dir / "index.txt");
    if (!index) {
        throw config_error("cannot read " + (cfg.data_dir / "index.txt").string());
    }
    std::string id, split;
    segmentation_config seg { cfg.min_segment_frames, cfg.max_segment_frames };
    while (index >> id >> split) {
        if (split != "train" && split != "dev" && split != "test") {
            throw parse_error("bad split for " + id + ": " + split);
        }
        c.split_of[id] = split;
        if (!splits.count(split)) {
            continue;
        }
        utterance_data utt;
        utt.id = id;
        {
            std::ifstream fis(cfg.data_dir / (id + ".frames"));
            if (!fis) {
                throw config_error("cannot read "
                    + (cfg.data_dir / (id + ".frames")).string());
            }
            utt.frames = read_frame_scores(fis, &std::cerr);
        }
        if (utt.frames.labels != c.labels.size()) {
            throw parse_error("frame scores of " + id + " have "
                + std::to_string(utt.frames.labels) + " labels, label file "
                + std::to_string(c.labels.size()));
        }
        utt.gold = read_gold_file(cfg.data_dir / (id + ".gold"), c.labels);
        validate_gold(utt.gold, utt.frames.frames, seg, c.labels.size());
        c.utts.push_back(std::move(utt));
    }
    if (c.utts.empty()) {
        throw empty_corpus("no utterances in requested splits");
    }
    return c;
}

template <class F>
static void parallel_for(int n, int workers, F&& f)
{
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }
    std::atomic<int> next { 0 };
    std::mutex mu;
    std::exception_ptr first;
    auto body = [&]() {
        for (int i; (i = next++) < n;) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first) {
                    first = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> threads;
    for (int w = 0; w < std::min(workers, n); ++w) {
        threads.emplace_back(body);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (first) {
        std::rethrow_exception(first);
    }
}

static std::string join_names(std::vector<int> const& seq, label_set const& labels)
{
    std::string out;
    for (int s : seq) {
        out += " ";
        out += format_label(s, labels);
    }
    return out;
}

// ---------------------------------------------------------------- synth

static void cmd_synth(fs::path const& config_path)
{
    run_config cfg = load_config(config_path, true);
    long total = long(cfg.synth_train) + cfg.synth_dev + cfg.synth_test;
    if (cfg.synth_train < 0 || cfg.synth_dev < 0 || cfg.synth_test < 0
            || total < 1) {
        throw config_error("bad synth split sizes");
    }
    if (cfg.synth_max_segment > cfg.max_segment_frames) {
        throw config_error("synth_max_segment exceeds max_segment_frames");
    }

    synth_config sc;
    sc.seed = cfg.seed;
    sc.utterances = int(total);
    sc.frames_min = cfg.synth_frames_min;
    sc.frames_max = cfg.synth_frames_max;
    sc.label_count = cfg.synth_labels;
    sc.mean_segment = cfg.synth_mean_segment;
    sc.max_segment = cfg.synth_max_segment;
    sc.sharpness = cfg.synth_sharpness;
    sc.transition_strength = cfg.synth_transition_strength;
    synth_corpus corpus = make_synth_corpus(sc);

    fs::create_directories(cfg.data_dir);
    {
        auto os = outputs.create(cfg.data_dir / "labels.txt");
        save_labels(os, corpus.labels);
    }
    {
        auto index = outputs.create(cfg.data_dir / "index.txt");
        auto refs = outputs.create(cfg.data_dir / "refs.txt");
        for (std::size_t i = 0; i < corpus.utts.size(); ++i) {
            auto& utt = corpus.utts[i];
            std::string split = long(i) < cfg.synth_train ? "train"
                : long(i) < cfg.synth_train + cfg.synth_dev ? "dev" : "test";
            index << utt.id << " " << split << "\n";
            refs << utt.id
                 << join_names(gold_labels(utt.gold), corpus.labels) << "\n";

            auto fos = outputs.create(cfg.data_dir / (utt.id + ".frames"));
            write_frame_scores(fos, utt.frames);
            auto gos = outputs.create(cfg.data_dir / (utt.id + ".gold"));
            for (auto& s : utt.gold) {
                gos << corpus.labels.name(s.label) << " " << s.start
                    << " " << s.end << "\n";
            }
        }
    }
    write_manifest(cfg.data_dir, "synth", &cfg, json::object(), {});
    std::cout << "synthesized " << corpus.utts.size() << " utterances into "
              << cfg.data_dir.string() << "\n";
}

// ---------------------------------------------------------------- train

static void write_train_log(std::ostream& os, std::vector<epoch_record> const& recs)
{
    for (auto& r : recs) {
        json line;
        line["level"] = r.level;
        line["step_size"] = r.step_size;
        line["epoch"] = r.epoch;
        line["train_loss_mean"] = r.train_loss_mean;
        line["dev_per"] = r.dev_per;
        line["skipped"] = r.skipped;
        os << line.dump() << "\n";
    }
}

static void cmd_train(fs::path const& config_path, int level)
{
    run_config cfg = load_config(config_path, false);
    corpus c = load_corpus(cfg, { "train", "dev" });

    std::vector<utterance_data> train, dev;
    for (auto& utt : c.utts) {
        (c.split_of[utt.id] == "train" ? train : dev).push_back(std::move(utt));
    }
    if (train.empty() || dev.empty()) {
        throw empty_corpus("training needs non-empty train and dev splits");
    }

    int k = c.labels.size();
    segmentation_config seg { cfg.min_segment_frames, cfg.max_segment_frames };
    train_config tc;
    tc.step_sizes = cfg.step_sizes;
    tc.patience = cfg.patience;
    tc.seed = cfg.seed;

    fs::create_directories(cfg.out_dir);
    std::vector<std::string> inputs { cfg.data_dir.string() };

    if (level == 1) {
        tc.max_epochs = cfg.max_epochs_level1;
        model m = make_model(cfg.templates_level1, k, cfg.max_segment_frames);

        std::vector<train_instance> tr(train.size());
        parallel_for(int(train.size()), cfg.workers, [&](int i) {
            tr[i] = make_span_instance(train[i], m, seg);
        });
        std::vector<eval_instance> dv(dev.size());
        parallel_for(int(dev.size()), cfg.workers, [&](int i) {
            dv[i] = make_span_eval(dev[i], m, seg);
        });

        auto records = train_level(1, tr, dv, m, tc);
        {
            auto os = outputs.create(cfg.out_dir / "model1.txt");
            write_model(os, m);
        }
        {
            auto os = outputs.create(cfg.out_dir / "train1.log.jsonl");
            write_train_log(os, records);
        }
        std::cout << "level 1 dev per " << dev_error(m, dv) << "\n";
    } else if (level == 2) {
        if (cfg.model1.empty()) {
            throw config_error("train --level 2 needs model1 in the config");
        }
        tc.max_epochs = cfg.max_epochs_level2;
        model m1;
        {
            std::ifstream is(cfg.model1);
            m1 = read_model(is);
        }
        if (m1.label_count != k) {
            throw config_error("model1 was trained with "
                + std::to_string(m1.label_count) + " labels, corpus has "
                + std::to_string(k));
        }
        inputs.push_back(cfg.model1.string());

        bigram_lm lm;
        if (!cfg.lm_file.empty()) {
            std::ifstream is(cfg.lm_file);
            lm = read_bigram_lm(is, c.labels);
            inputs.push_back(cfg.lm_file.string());
        } else {
            std::vector<std::vector<int>> transcripts;
            for (auto& utt : train) {
                transcripts.push_back(gold_labels(utt.gold));
            }
            lm = estimate_bigram_lm(transcripts, k, cfg.lm_k);
            auto os = outputs.create(cfg.out_dir / "lm.txt");
            write_bigram_lm(os, lm, c.labels);
        }
        decoding_graph lm_graph = build_bigram_lm_graph(lm, k);

        model m2 = make_model(cfg.templates_level2, k, cfg.max_segment_frames);

        std::vector<train_instance> tr(train.size());
        parallel_for(int(train.size()), cfg.workers, [&](int i) {
            train_instance h1 = make_span_instance(train[i], m1, seg);
            score_with_model(h1.graph, m1, h1.feats);
            prune_result pr = prune_to_lattice(h1.graph, cfg.lambda);
            composed_graph cg = sigma_compose(pr.lattice, lm_graph);
            tr[i] = make_composed_instance(cg, train[i].frames, m2,
                train[i].gold);
        });
        std::vector<eval_instance> dv(dev.size());
        parallel_for(int(dev.size()), cfg.workers, [&](int i) {
            train_instance h1 = make_span_instance(dev[i], m1, seg);
            score_with_model(h1.graph, m1, h1.feats);
            prune_result pr = prune_to_lattice(h1.graph, cfg.lambda);
            composed_graph cg = sigma_compose(pr.lattice, lm_graph);
            dv[i] = make_composed_eval(cg, dev[i].frames, m2,
                gold_labels(dev[i].gold));
        });

        auto records = train_level(2, tr, dv, m2, tc);
        {
            auto os = outputs.create(cfg.out_dir / "model2.txt");
            write_model(os, m2);
        }
        {
            auto os = outputs.create(cfg.out_dir / "train2.log.jsonl");
            write_train_log(os, records);
        }
        std::cout << "level 2 dev per " << dev_error(m2, dv) << "\n";
    } else {
        throw config_error("--level must be 1 or 2");
    }

    json flags;
    flags["level"] = level;
    write_manifest(cfg.out_dir, "train" + std::to_string(level), &cfg, flags,
        inputs);
}

// ---------------------------------------------------------------- decode

struct scored_space {
    decoding_graph graph;
    feature_cache feats;
};

// A lattice file whose output side carries label pairs came out of
// composition and scores with level-two contexts; anything else
// scores with plain segment contexts.
static scored_space load_space(run_config const& cfg, corpus const& c,
    utterance_data const& utt, model const& m, model const* m1,
    fs::path const& lattice_dir)
{
    scored_space out;
    segmentation_config seg { cfg.min_segment_frames, cfg.max_segment_frames };
    if (lattice_dir.empty()) {
        out.graph = build_full_space(utt.frames.frames, m.label_count, seg);
        out.feats = extract_all(m, utt.frames, out.graph,
            [&](edge const& e) { return h1_context(out.graph, e); });
        return out;
    }

    fs::path path = lattice_dir / (utt.id + ".lat");
    std::ifstream is(path);
    if (!is) {
        throw config_error("cannot read " + path.string());
    }
    std::stringstream buf;
    buf << is.rdbuf();

    decoding_graph plain = read_lattice(buf, c.labels);
    bool composed = false;
    for (auto& e : plain.edges) {
        if (is_pair_label(e.output, c.labels.size())) {
            composed = true;
            break;
        }
    }
    if (!composed) {
        out.graph = std::move(plain);
        out.feats = extract_all(m, utt.frames, out.graph,
            [&](edge const& e) { return h1_context(out.graph, e); });
        return out;
    }

    if (!m1) {
        throw config_error("composed lattice " + path.string()
            + " needs --model1");
    }
    buf.clear();
    buf.seekg(0);
    composed_graph cg = load_composed_lattice(buf, c.labels, utt.frames, *m1);
    out.graph = cg.g;
    out.feats = extract_all(m, utt.frames, out.graph,
        [&](edge const& e) { return composed_context(cg, e, c.labels.size()); });
    return out;
}

static void cmd_decode(fs::path const& config_path, fs::path const& model_path,
    fs::path const& model1_path, fs::path const& lattice_dir, int beam_width,
    std::string const& split)
{
    run_config cfg = load_config(config_path, false);
    corpus c = load_corpus(cfg, { split });

    model m;
    {
        std::ifstream is(model_path);
        if (!is) {
            throw config_error("cannot read " + model_path.string());
        }
        m = read_model(is);
    }
    model m1;
    bool have_m1 = !model1_path.empty();
    if (have_m1) {
        std::ifstream is(model1_path);
        if (!is) {
            throw config_error("cannot read " + model1_path.string());
        }
        m1 = read_model(is);
    }

    int n = int(c.utts.size());
    std::vector<std::vector<int>> hyps(n);
    std::vector<double> scores(n);
    parallel_for(n, cfg.workers, [&](int i) {
        scored_space sp = load_space(cfg, c, c.utts[i], m,
            have_m1 ? &m1 : nullptr, lattice_dir);
        auto wf = [&](edge const& e) {
            return dot(m.theta, sp.feats.by_edge[e.id]);
        };
        best_path_result r = beam_width > 0
            ? beam_decode(sp.graph, wf, beam_width)
            : best_path(sp.graph, wf);
        hyps[i] = path_labels(sp.graph, r.p);
        scores[i] = r.score;
    });

    fs::create_directories(cfg.out_dir);
    {
        auto os = outputs.create(cfg.out_dir / ("hyp_" + split + ".txt"));
        for (int i = 0; i < n; ++i) {
            os << c.utts[i].id << join_names(hyps[i], c.labels) << "\n";
        }
    }
    {
        auto os = outputs.create(cfg.out_dir / ("decode_" + split + ".jsonl"));
        for (int i = 0; i < n; ++i) {
            json line;
            line["id"] = c.utts[i].id;
            line["score"] = scores[i];
            os << line.dump() << "\n";
        }
    }

    json flags;
    flags["model"] = model_path.string();
    flags["split"] = split;
    if (have_m1) {
        flags["model1"] = model1_path.string();
    }
    if (!lattice_dir.empty()) {
        flags["lattice_dir"] = lattice_dir.string();
    }
    flags["beam"] = beam_width;
    std::vector<std::string> inputs { cfg.data_dir.string(), model_path.string() };
    if (!lattice_dir.empty()) {
        inputs.push_back(lattice_dir.string());
    }
    write_manifest(cfg.out_dir, "decode_" + split, &cfg, flags, inputs);
    std::cout << "decoded " << n << " utterances\n";
}

// ---------------------------------------------------------------- prune

static void cmd_prune(fs::path const& config_path, fs::path const& model_path,
    double lambda, std::string const& split)
{
    if (lambda < 0 || lambda > 1) {
        throw config_error("lambda must lie in [0, 1]");
    }
    run_config cfg = load_config(config_path, false);
    corpus c = load_corpus(cfg, { split });

    model m;
    {
        std::ifstream is(model_path);
        if (!is) {
            throw config_error("cannot read " + model_path.string());
        }
        m = read_model(is);
    }

    segmentation_config seg { cfg.min_segment_frames, cfg.max_segment_frames };
    int n = int(c.utts.size());
    std::vector<prune_result> results(n);
    parallel_for(n, cfg.workers, [&](int i) {
        auto& utt = c.utts[i];
        decoding_graph g = build_full_space(utt.frames.frames,
            m.label_count, seg);
        feature_cache feats = extract_all(m, utt.frames, g,
            [&](edge const& e) { return h1_context(g, e); });
        score_with_model(g, m, feats);
        results[i] = prune_to_lattice(g, lambda);
        lattice_metrics(results[i].lattice, utt.gold, nullptr,
            results[i].report);
    });

    fs::create_directories(cfg.out_dir / "lattices");
    for (int i = 0; i < n; ++i) {
        auto os = outputs.create(cfg.out_dir / "lattices"
            / (c.utts[i].id + ".lat"));
        write_lattice(os, results[i].lattice, c.labels);
    }
    {
        auto os = outputs.create(cfg.out_dir / ("prune_" + split + ".jsonl"));
        for (int i = 0; i < n; ++i) {
            auto& r = results[i].report;
            json line;
            line["id"] = c.utts[i].id;
            line["lambda"] = r.lambda;
            line["threshold"] = r.threshold;
            line["kept_edges"] = r.kept_edges;
            line["total_edges"] = r.total_edges;
            line["density"] = r.density;
            line["oracle_error"] = r.oracle_error;
            os << line.dump() << "\n";
        }
    }

    json flags;
    flags["model"] = model_path.string();
    flags["lambda"] = lambda;
    flags["split"] = split;
    write_manifest(cfg.out_dir, "prune_" + split, &cfg, flags,
        { cfg.data_dir.string(), model_path.string() });
    std::cout << "pruned " << n << " utterances\n";
}

// ---------------------------------------------------------------- compose

static void cmd_compose(fs::path const& config_path, fs::path const& lattice_dir,
    fs::path const& lm_path)
{
    run_config cfg = load_config(config_path, false);
    if (!fs::is_directory(lattice_dir)) {
        throw config_error("lattice dir does not exist: " + lattice_dir.string());
    }

    label_set labels;
    {
        std::ifstream is(cfg.data_dir / "labels.txt");
        if (!is) {
            throw config_error("cannot read "
                + (cfg.data_dir / "labels.txt").string());
        }
        labels = load_labels(is);
    }
    bigram_lm lm;
    {
        std::ifstream is(lm_path);
        if (!is) {
            throw config_error("cannot read " + lm_path.string());
        }
        lm = read_bigram_lm(is, labels);
    }
    decoding_graph lm_graph = build_bigram_lm_graph(lm, labels.size());

    std::vector<fs::path> files;
    for (auto& entry : fs::directory_iterator(lattice_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".lat") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw empty_corpus("no .lat files in " + lattice_dir.string());
    }

    int n = int(files.size());
    std::vector<composed_graph> composed(n);
    parallel_for(n, cfg.workers, [&](int i) {
        std::ifstream is(files[i]);
        decoding_graph lat = read_lattice(is, labels);
        for (auto& e : lat.edges) {
            if (is_pair_label(e.output, labels.size())) {
                throw config_error(files[i].string() + " is already composed");
            }
        }
        composed[i] = sigma_compose(lat, lm_graph);
    });

    fs::create_directories(cfg.out_dir / "composed");
    for (int i = 0; i < n; ++i) {
        auto os = outputs.create(cfg.out_dir / "composed" / files[i].filename());
        write_composed_lattice(os, composed[i], labels);
    }

    json flags;
    flags["lattice_dir"] = lattice_dir.string();
    flags["lm"] = lm_path.string();
    write_manifest(cfg.out_dir, "compose", &cfg, flags,
        { lattice_dir.string(), lm_path.string() });
    std::cout << "composed " << n << " lattices\n";
}

// ---------------------------------------------------------------- eval

static std::map<std::string, std::vector<std::string>> read_transcripts(
    fs::path const& path)
{
    std::ifstream is(path);
    if (!is) {
        throw config_error("cannot read " + path.string());
    }
    std::map<std::string, std::vector<std::string>> out;
    std::string line;
    while (std::getline(is, line)) {
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string id, tok;
        ls >> id;
        if (out.count(id)) {
            throw parse_error("duplicate utterance id: " + id);
        }
        auto& seq = out[id];
        while (ls >> tok) {
            seq.push_back(tok);
        }
    }
    if (out.empty()) {
        throw empty_corpus("no transcripts in " + path.string());
    }
    return out;
}

static void cmd_eval(fs::path const& hyp_path, fs::path const& ref_path,
    fs::path const& collapse_path)
{
    auto hyp = read_transcripts(hyp_path);
    auto ref = read_transcripts(ref_path);

    std::map<std::string, std::string> collapse;
    bool have_collapse = !collapse_path.empty();
    if (have_collapse) {
        std::ifstream is(collapse_path);
        if (!is) {
            throw config_error("cannot read " + collapse_path.string());
        }
        std::string from, to;
        while (is >> from >> to) {
            collapse[from] = to;
        }
    }

    label_set interned;
    auto encode = [&](std::vector<std::string> const& seq) {
        std::vector<int> out;
        for (auto tok : seq) {
            if (have_collapse) {
                auto it = collapse.find(tok);
                if (it == collapse.end()) {
                    throw unmapped_label("label not in collapse map: " + tok);
                }
                tok = it->second;
            }
            if (!interned.has(tok)) {
                interned.add(tok);
            }
            out.push_back(interned.id(tok));
        }
        return out;
    };

    std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
    for (auto& [id, rseq] : ref) {
        auto it = hyp.find(id);
        if (it == hyp.end()) {
            throw parse_error("hypothesis transcript is missing " + id);
        }
        pairs.emplace_back(encode(it->second), encode(rseq));
    }

    per_result r = corpus_per(pairs);
    json report;
    report["utterances"] = pairs.size();
    report["S"] = r.subs;
    report["I"] = r.ins;
    report["D"] = r.dels;
    report["per"] = r.rate;
    std::cout << report.dump() << "\n";
}

// ---------------------------------------------------------------- hitrate

static void cmd_hitrate(fs::path const& config_path, fs::path const& model_path,
    int width, std::string const& split)
{
    if (width < 1) {
        throw config_error("beam width must be positive");
    }
    run_config cfg = load_config(config_path, false);
    corpus c = load_corpus(cfg, { split });

    model m;
    {
        std::ifstream is(model_path);
        if (!is) {
            throw config_error("cannot read " + model_path.string());
        }
        m = read_model(is);
    }

    segmentation_config seg { cfg.min_segment_frames, cfg.max_segment_frames };
    int n = int(c.utts.size());
    std::vector<double> beam_scores(n), exact_scores(n);
    std::vector<char> hits(n);
    parallel_for(n, cfg.workers, [&](int i) {
        auto& utt = c.utts[i];
        decoding_graph g = build_full_space(utt.frames.frames,
            m.label_count, seg);
        feature_cache feats = extract_all(m, utt.frames, g,
            [&](edge const& e) { return h1_context(g, e); });
        auto wf = [&](edge const& e) { return dot(m.theta, feats.by_edge[e.id]); };
        best_path_result exact = best_path(g, wf);
        best_path_result beam = beam_decode(g, wf, width);
        beam_scores[i] = beam.score;
        exact_scores[i] = exact.score;
        hits[i] = beam.p == exact.p;
    });

    long hit_count = 0;
    fs::create_directories(cfg.out_dir);
    {
        auto os = outputs.create(cfg.out_dir / ("hitrate_" + split + ".jsonl"));
        for (int i = 0; i < n; ++i) {
            json line;
            line["id"] = c.utts[i].id;
            line["width"] = width;
            line["beam_score"] = beam_scores[i];
            line["exact_score"] = exact_scores[i];
            line["hit"] = bool(hits[i]);
            os << line.dump() << "\n";
            hit_count += hits[i];
        }
        json summary;
        summary["width"] = width;
        summary["hit_rate"] = double(hit_count) / n;
        os << summary.dump() << "\n";
    }

    json flags;
    flags["model"] = model_path.string();
    flags["beam"] = width;
    flags["split"] = split;
    write_manifest(cfg.out_dir, "hitrate_" + split, &cfg, flags,
        { cfg.data_dir.string(), model_path.string() });
    std::cout << "hit rate " << double(hit_count) / n << " at width "
              << width << "\n";
}

// ---------------------------------------------------------------- main

int main(int argc, char** argv)
{
    CLI::App app { "segmental cascade toolkit" };
    app.require_subcommand(1);

    std::string config, model_path, model1_path, lattice_dir, lm_path;
    std::string hyp_path, ref_path, collapse_path;
    std::string split = "dev";
    int level = 1;
    int beam_width = 0;
    double lambda = 0.7;
    bool exact = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    synth->add_option("config", config)->required();

    auto* train = app.add_subcommand("train", "train one cascade level");
    train->add_option("config", config)->required();
    train->add_option("--level", level)->required();

    auto* decode = app.add_subcommand("decode", "decode a corpus split");
    decode->add_option("config", config)->required();
    decode->add_option("--model", model_path)->required();
    decode->add_option("--model1", model1_path);
    decode->add_option("--lattice-dir", lattice_dir);
    auto* beam_opt = decode->add_option("--beam", beam_width);
    auto* exact_opt = decode->add_flag("--exact", exact);
    beam_opt->excludes(exact_opt);
    decode->add_option("--split", split)->check(
        CLI::IsMember({ "train", "dev", "test" }));

    auto* prune = app.add_subcommand("prune", "prune spaces to lattices");
    prune->add_option("config", config)->required();
    prune->add_option("--model", model_path)->required();
    prune->add_option("--lambda", lambda)->required();
    prune->add_option("--split", split)->check(
        CLI::IsMember({ "train", "dev", "test" }));

    auto* compose = app.add_subcommand("compose",
        "compose lattices with a label model");
    compose->add_option("config", config)->required();
    compose->add_option("--lattice-dir", lattice_dir)->required();
    compose->add_option("--lm", lm_path)->required();

    auto* eval = app.add_subcommand("eval", "score hypotheses against references");
    eval->add_option("--hyp", hyp_path)->required();
    eval->add_option("--ref", ref_path)->required();
    eval->add_option("--collapse", collapse_path);

    auto* hitrate = app.add_subcommand("hitrate", "beam search hit rate");
    hitrate->add_option("config", config)->required();
    hitrate->add_option("--model", model_path)->required();
    hitrate->add_option("--beam", beam_width)->required();
    hitrate->add_option("--split", split)->check(
        CLI::IsMember({ "train", "dev", "test" }));

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(synth)) {
            cmd_synth(config);
        } else if (app.got_subcommand(train)) {
            cmd_train(config, level);
        } else if (app.got_subcommand(decode)) {
            if (beam_opt->count() && beam_width < 1) {
                throw config_error("beam width must be positive");
            }
            cmd_decode(config, model_path, model1_path, lattice_dir,
                beam_width, split);
        } else if (app.got_subcommand(prune)) {
            cmd_prune(config, model_path, lambda, split);
        } else if (app.got_subcommand(compose)) {
            cmd_compose(config, lattice_dir, lm_path);
        } else if (app.got_subcommand(eval)) {
            cmd_eval(hyp_path, ref_path, collapse_path);
        } else if (app.got_subcommand(hitrate)) {
            cmd_hitrate(config, model_path, beam_width, split);
        }
    } catch (std::exception const& e) {
        outputs.discard();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
