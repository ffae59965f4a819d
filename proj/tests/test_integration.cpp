#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kan/checkpoint.hpp"
#include "kan/config.hpp"
#include "kan/errors.hpp"
#include "kan/experiment.hpp"

using namespace kan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("kan_it_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Hyperparams small_hp() {
    Hyperparams hp;
    hp.dims = 12;
    hp.step = 10;
    hp.batch_size = 16;
    hp.max_epochs = 4;
    hp.patience = 2;
    return hp;
}

}  // namespace

TEST_CASE("run config parsing") {
    nlohmann::json j = {
        {"out_dir", "/tmp/x"},
        {"data", {{"synthetic", {{"n_tasks", 2}, {"n_docs", 40}}}}},
        {"models", {"ONE", "KAN"}},
        {"n_sequences", 2},
        {"seed", 7},
        {"hyperparams", {{"dims", 16}, {"step", 8}}}};
    RunConfig c = run_config_from_json(j);
    CHECK(c.models == std::vector<ModelKind>{ModelKind::ONE, ModelKind::KAN});
    CHECK(c.hp.dims == 16);
    CHECK(c.hp.lr == 0.001);  // untouched defaults stay
    CHECK(c.synthetic->n_tasks == 2);

    auto bad = j;
    bad["typo_key"] = 1;
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    bad = j;
    bad["hyperparams"]["momentum"] = 0.9;
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    bad = j;
    bad["data"]["prepared"] = "/also/set";  // both sources set
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    bad = j;
    bad["data"].erase("synthetic");  // no source at all
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
    bad = j;
    bad["models"] = {"EWC"};
    CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
}

TEST_CASE("prepare is deterministic and loadable") {
    TempDir corpus("corpus"), out1("prep1"), out2("prep2");
    for (int t = 0; t < 2; ++t) {
        std::ofstream f(corpus.path / ("books" + std::to_string(t) + ".jsonl"));
        for (int i = 0; i < 30; ++i)
            f << R"({"text": "item )" << i << (i % 2 ? R"( was great great)"
                                                     : R"( was awful awful)")
              << R"(", "label": ")" << (i % 2 ? "pos" : "neg") << "\"}\n";
    }
    cmd_prepare(corpus.path.string(), out1.path.string(), 5);
    cmd_prepare(corpus.path.string(), out2.path.string(), 5);
    CHECK(slurp(out1.path / "manifest.json") ==
          slurp(out2.path / "manifest.json"));
    CHECK(slurp(out1.path / "vocab.json") == slurp(out2.path / "vocab.json"));
    CHECK(slurp(out1.path / "tasks/books0.json") ==
          slurp(out2.path / "tasks/books0.json"));

    Corpus c = load_prepared(out1.path.string(), 6);
    REQUIRE(c.tasks.size() == 2);
    CHECK(c.tasks[0].name == "books0");
    CHECK(c.tasks[0].train.size() == 24);
    CHECK(c.tasks[0].valid.size() == 3);
    CHECK(c.tasks[0].test.size() == 3);
    for (const auto& d : c.tasks[0].train) CHECK(d.tokens.size() == 6);

    // a different seed shuffles the splits differently
    TempDir out3("prep3");
    cmd_prepare(corpus.path.string(), out3.path.string(), 6);
    CHECK(slurp(out1.path / "tasks/books0.json") !=
          slurp(out3.path / "tasks/books0.json"));

    CHECK_THROWS_AS(load_prepared("/nonexistent/prep", 6), DataError);
}

TEST_CASE("checkpoints round trip bit-exactly") {
    TempDir dir("ckpt");
    Hyperparams hp = small_hp();
    SyntheticSpec spec;
    spec.n_tasks = 2;
    spec.n_docs = 40;
    spec.seed = 3;
    Corpus c = prepare_corpus(gen_synthetic_tasks(spec), hp.step, 3);
    Rng rng(8);
    KanModel model =
        KanModel::init(2, random_embeddings(c.vocab, hp.dims, 3), hp, rng);
    model.task_trained[0] = true;
    // make the payload non-trivial, including values with odd bit patterns
    model.kb.wz.data()[0] = 1.0 / 3.0;
    model.heads[1].b.data()[1] = -0.0;

    const std::string path = (dir.path / "model.json").string();
    save_checkpoint(path, model, c.vocab.hash(), hp);
    LoadedCheckpoint lc = load_checkpoint(path);
    CHECK(lc.vocab_hash == c.vocab.hash());
    CHECK(lc.hp.dims == hp.dims);
    CHECK(lc.hp.lr == hp.lr);
    CHECK(lc.model.task_trained == model.task_trained);
    auto orig = model.named_tensors();
    auto back = lc.model.named_tensors();
    REQUIRE(orig.size() == back.size());
    for (size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i].name == back[i].name);
        CHECK(orig[i].tensor.data() == back[i].tensor.data());
    }
    CHECK(fingerprint(orig) == fingerprint(back));

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), DataError);
}

TEST_CASE("fully shared cues transfer zero-shot, disjoint cues do not") {
    Hyperparams hp;
    hp.dims = 24;
    hp.step = 10;
    hp.batch_size = 16;
    hp.lr = 0.01;          // the tiny network needs an aggressive schedule
    hp.dropout_keep = 1.0;
    hp.max_epochs = 40;
    hp.patience = 12;
    auto run_share = [&](double share, uint64_t seed) {
        SyntheticSpec spec;
        spec.n_tasks = 2;
        spec.n_docs = 400;
        spec.share = share;
        spec.seed = seed;
        spec.doc_len_min = 4;
        spec.doc_len_max = 8;
        spec.n_neutral = 30;
        spec.n_shared_cues = 10;
        spec.n_task_cues = 8;
        Corpus c = prepare_corpus(gen_synthetic_tasks(spec), hp.step, seed);
        Tensor emb = random_embeddings(c.vocab, hp.dims, seed);
        std::vector<const TaskDataset*> one = {&c.tasks[0]};
        auto r = continual_learn(ModelKind::NCL, one, emb, hp, seed);
        // evaluate the task-0 head zero-shot on task 1's test set
        return mcl_accuracy(r.model, 0, c.tasks[1].test, hp.batch_size, true);
    };
    CHECK(run_share(1.0, 21) > 0.9);  // identical cue lexicons transfer
    const double disjoint = run_share(0.0, 21);
    CHECK(disjoint > 0.35);  // chance-ish: unseen cues carry no signal
    CHECK(disjoint < 0.65);
}

TEST_CASE("interrupted runs resume and finish identically") {
    TempDir dir("resume");
    RunConfig cfg;
    cfg.out_dir = (dir.path / "full").string();
    SyntheticSpec spec;
    spec.n_tasks = 3;
    spec.n_docs = 60;
    spec.seed = 2;
    cfg.synthetic = spec;
    cfg.models = {ModelKind::KAN};
    cfg.n_sequences = 1;
    cfg.seed = 11;
    cfg.hp = small_hp();
    cfg.hp.max_epochs = 2;

    auto full = cmd_run(cfg);

    // simulate an interruption: drop the finished report but keep the
    // checkpoint, which holds the state after the final task
    RunConfig cfg2 = cfg;
    cfg2.out_dir = (dir.path / "interrupted").string();
    cmd_run(cfg2);
    fs::remove(fs::path(cfg2.out_dir) / "runs/KAN_seq0/report.json");
    fs::remove(fs::path(cfg2.out_dir) / "experiment_report.json");
    auto resumed = cmd_run(cfg2);

    CHECK(resumed.sequences[0].progressive == full.sequences[0].progressive);
    CHECK(resumed.all_tasks_avg == full.all_tasks_avg);
}

TEST_CASE("the CLI maps error classes to exit codes") {
    const char* cli = std::getenv("KAN_CLI");
    REQUIRE(cli != nullptr);
    const std::string exe = cli;
    TempDir dir("cli");

    auto run = [](const std::string& cmd) {
        const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };

    // config errors -> 2
    CHECK(run(exe + " run --config /nonexistent.json") == 2);
    const fs::path bad_cfg = dir.path / "bad.json";
    std::ofstream(bad_cfg) << R"({"out_dir": "/tmp/x", "bogus": 1})";
    CHECK(run(exe + " run --config " + bad_cfg.string()) == 2);

    // data errors -> 3
    CHECK(run(exe + " prepare --corpus /nonexistent --out " +
              (dir.path / "p").string() + " --seed 1") == 3);
    CHECK(run(exe + " report --run " + (dir.path / "empty").string()) == 3);

    // success -> 0
    const fs::path good_cfg = dir.path / "good.json";
    std::ofstream(good_cfg) << R"({
      "out_dir": ")" << (dir.path / "out").string() << R"(",
      "data": {"synthetic": {"n_tasks": 2, "n_docs": 40, "seed": 1}},
      "models": ["ONE"],
      "n_sequences": 1,
      "seed": 4,
      "hyperparams": {"dims": 8, "step": 8, "max_epochs": 2, "batch_size": 16}
    })";
    CHECK(run(exe + " run --config " + good_cfg.string()) == 0);
    CHECK(run(exe + " report --run " + (dir.path / "out").string()) == 0);
}
