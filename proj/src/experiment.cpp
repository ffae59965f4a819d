#include "kan/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "kan/checkpoint.hpp"
#include "kan/errors.hpp"

namespace kan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed JSON in " + path.string());
    return j;
}

}  // namespace

void cmd_prepare(const std::string& corpus_dir, const std::string& out_dir,
                 uint64_t seed) {
    std::vector<fs::path> files;
    if (!fs::is_directory(corpus_dir))
        throw DataError("corpus directory not found: " + corpus_dir);
    for (const auto& e : fs::directory_iterator(corpus_dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no corpus files in " + corpus_dir);

    std::vector<RawTask> raw;
    for (const auto& f : files) raw.push_back(load_task_file(f.string()));

    std::vector<Splits<RawDoc>> splits;
    for (size_t i = 0; i < raw.size(); ++i)
        splits.push_back(split_task(raw[i].docs, mix_seed(seed, i)));
    Vocab vocab = build_vocab(splits);

    fs::create_directories(fs::path(out_dir) / "tasks");
    write_json(fs::path(out_dir) / "vocab.json",
               json{{"schema_version", kManifestSchemaVersion},
                    {"tokens", vocab.id_to_token}});

    auto encode_split = [&](const std::vector<RawDoc>& docs) {
        json arr = json::array();
        for (const auto& d : docs) {
            std::vector<int32_t> ids;
            ids.reserve(d.tokens.size());
            for (const auto& t : d.tokens) ids.push_back(vocab.id(t));
            arr.push_back(json{{"tokens", ids}, {"label", d.label}});
        }
        return arr;
    };

    json manifest_tasks = json::array();
    for (size_t i = 0; i < raw.size(); ++i) {
        json tj{{"name", raw[i].name},
                {"train", encode_split(splits[i].train)},
                {"valid", encode_split(splits[i].valid)},
                {"test", encode_split(splits[i].test)}};
        const std::string file = "tasks/" + raw[i].name + ".json";
        write_json(fs::path(out_dir) / file, tj);
        manifest_tasks.push_back(json{{"name", raw[i].name},
                                      {"file", file},
                                      {"n_train", splits[i].train.size()},
                                      {"n_valid", splits[i].valid.size()},
                                      {"n_test", splits[i].test.size()}});
    }
    write_json(fs::path(out_dir) / "manifest.json",
               json{{"schema_version", kManifestSchemaVersion},
                    {"seed", seed},
                    {"vocab_hash", vocab.hash()},
                    {"tasks", manifest_tasks}});
}

Corpus load_prepared(const std::string& dir, size_t step) {
    json manifest = read_json(fs::path(dir) / "manifest.json");
    if (manifest.value("schema_version", -1) != kManifestSchemaVersion)
        throw DataError("manifest schema version mismatch in " + dir);
    json vj = read_json(fs::path(dir) / "vocab.json");

    Corpus corpus;
    auto tokens = vj.at("tokens").get<std::vector<std::string>>();
    if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>")
        throw DataError("vocab.json missing reserved tokens in " + dir);
    for (size_t i = 2; i < tokens.size(); ++i) corpus.vocab.add(tokens[i]);

    auto decode_split = [&](const json& arr, std::vector<Document>& out) {
        for (const auto& dj : arr) {
            Document d;
            auto ids = dj.at("tokens").get<std::vector<int32_t>>();
            d.label = dj.at("label").get<int32_t>();
            d.raw_len = ids.size();
            d.tokens.assign(step, Vocab::kPad);
            const size_t keep = std::min(ids.size(), step);
            for (size_t i = 0; i < keep; ++i)
                d.tokens[step - keep + i] = ids[i];
            out.push_back(std::move(d));
        }
    };
    for (const auto& tj : manifest.at("tasks")) {
        json t = read_json(fs::path(dir) /
                           tj.at("file").get<std::string>());
        TaskDataset ds;
        ds.name = t.at("name").get<std::string>();
        decode_split(t.at("train"), ds.train);
        decode_split(t.at("valid"), ds.valid);
        decode_split(t.at("test"), ds.test);
        corpus.tasks.push_back(std::move(ds));
    }
    return corpus;
}

namespace {

struct Cell {
    ModelKind kind;
    size_t seq_index;
    uint64_t seed;
    fs::path dir;
};

SequenceReport run_cell(const Cell& cell,
                        const std::vector<TaskDataset>& datasets,
                        const std::vector<size_t>& order,
                        const Tensor& embeddings, const Hyperparams& hp,
                        uint64_t vocab_hash) {
    const fs::path report_path = cell.dir / "report.json";
    if (fs::exists(report_path))
        return sequence_report_from_json(read_json(report_path));

    fs::create_directories(cell.dir);
    std::ofstream log(cell.dir / "log.txt", std::ios::app);

    const fs::path ckpt_path = cell.dir / "checkpoint.json";
    RunPersistence persist;
    persist.save = [&](const KanModel& model, const RunProgress& prog) {
        json extra{{"tasks_done", prog.tasks_done},
                   {"progressive", prog.progressive},
                   {"rng_init", prog.rng_init_state},
                   {"rng_ac", prog.rng_ac_state},
                   {"rng_mcl", prog.rng_mcl_state}};
        const fs::path tmp = cell.dir / "checkpoint.json.tmp";
        save_checkpoint(tmp.string(), model, vocab_hash, hp, &extra);
        fs::rename(tmp, ckpt_path);
    };
    persist.load = [&](KanModel& model, RunProgress& prog) {
        if (!fs::exists(ckpt_path)) return false;
        LoadedCheckpoint cp = load_checkpoint(ckpt_path.string());
        if (cp.extra.is_null() || cp.vocab_hash != vocab_hash) return false;
        model = std::move(cp.model);
        prog.tasks_done = cp.extra.at("tasks_done").get<size_t>();
        prog.progressive =
            cp.extra.at("progressive").get<std::vector<std::vector<double>>>();
        prog.rng_init_state = cp.extra.at("rng_init").get<std::string>();
        prog.rng_ac_state = cp.extra.at("rng_ac").get<std::string>();
        prog.rng_mcl_state = cp.extra.at("rng_mcl").get<std::string>();
        return true;
    };

    SequenceReport rep = run_model(cell.kind, datasets, order, embeddings,
                                   hp, cell.seed, &log, &persist);
    const fs::path tmp = cell.dir / "report.json.tmp";
    write_json(tmp, sequence_report_to_json(rep));
    fs::rename(tmp, report_path);
    return rep;
}

size_t worker_count() {
    if (const char* env = std::getenv("KAN_WORKERS")) {
        const long n = std::atol(env);
        if (n >= 1) return static_cast<size_t>(n);
    }
    return 1;
}

std::vector<size_t> quarter_checkpoints(size_t n_tasks) {
    std::set<size_t> ks;
    for (size_t q = 1; q <= 4; ++q)
        ks.insert(std::max<size_t>(1, n_tasks * q / 4));
    return {ks.begin(), ks.end()};
}

void write_csv_tables(const fs::path& out_dir, const ExperimentReport& exp) {
    {  // Table 1: model x (All Tasks, Last Task, p-value vs first model)
        std::ofstream t1(out_dir / "table1.csv");
        t1 << "model,all_tasks,last_task,p_value\n";
        for (size_t i = 0; i < exp.models.size(); ++i) {
            t1 << exp.models[i] << ',' << exp.all_tasks_avg[i] << ','
               << exp.last_task_avg[i] << ',';
            if (i == 0)
                t1 << "-";
            else if (exp.p_values[i - 1] >= 0.0)
                t1 << exp.p_values[i - 1];
            else
                t1 << "n/a";
            t1 << '\n';
        }
    }
    {  // Table 2: task x model mean final accuracy
        std::map<std::string, std::map<std::string, std::pair<double, size_t>>>
            acc;  // task -> model -> (sum, count)
        for (const auto& s : exp.sequences)
            for (size_t i = 0; i < s.task_order.size(); ++i) {
                auto& cell = acc[s.task_order[i]][s.model];
                cell.first += s.final_acc[i];
                cell.second += 1;
            }
        std::ofstream t2(out_dir / "table2.csv");
        t2 << "task";
        for (const auto& m : exp.models) t2 << ',' << m;
        t2 << '\n';
        for (const auto& [task, per_model] : acc) {
            t2 << task;
            for (const auto& m : exp.models) {
                auto it = per_model.find(m);
                t2 << ',';
                if (it != per_model.end())
                    t2 << it->second.first /
                              static_cast<double>(it->second.second);
            }
            t2 << '\n';
        }
    }
    {  // Table 3: checkpoint x model forward/backward transfer
        std::map<std::string, std::vector<SequenceReport>> by_model;
        for (const auto& s : exp.sequences) by_model[s.model].push_back(s);
        const size_t n_tasks =
            exp.sequences.empty() ? 0 : exp.sequences[0].task_order.size();
        const auto ks = quarter_checkpoints(n_tasks);
        std::ofstream t3(out_dir / "table3.csv");
        t3 << "tasks";
        for (const auto& m : exp.models)
            t3 << ',' << m << "_forward," << m << "_backward";
        t3 << '\n';
        std::map<std::string, std::vector<TransferRow>> rows;
        for (const auto& m : exp.models)
            rows[m] = transfer_table(by_model[m], ks);
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            t3 << ks[ki];
            for (const auto& m : exp.models)
                t3 << ',' << rows[m][ki].forward << ','
                   << rows[m][ki].backward;
            t3 << '\n';
        }
    }
}

}  // namespace

ExperimentReport cmd_run(const RunConfig& config) {
    config.validate();
    const fs::path out_dir = config.out_dir;
    fs::create_directories(out_dir / "runs");
    write_json(out_dir / "config.json", run_config_to_json(config));

    // data
    Corpus corpus;
    if (config.synthetic)
        corpus = prepare_corpus(gen_synthetic_tasks(*config.synthetic),
                                config.hp.step, config.seed);
    else
        corpus = load_prepared(*config.prepared_dir, config.hp.step);
    if (corpus.tasks.empty()) throw DataError("run: no tasks in corpus");

    Tensor embeddings =
        config.embedding_path
            ? load_embeddings(*config.embedding_path, corpus.vocab,
                              config.hp.dims, config.seed)
            : random_embeddings(corpus.vocab, config.hp.dims, config.seed);
    const uint64_t vocab_hash = corpus.vocab.hash();

    const auto orders = gen_task_orders(corpus.tasks.size(),
                                        config.n_sequences, config.seed);

    std::vector<Cell> cells;
    for (ModelKind kind : config.models)
        for (size_t i = 0; i < orders.size(); ++i) {
            Cell c;
            c.kind = kind;
            c.seq_index = i;
            c.seed = mix_seed(config.seed, 0x9000 + i);
            c.dir = out_dir / "runs" /
                    (to_string(kind) + "_seq" + std::to_string(i));
            cells.push_back(std::move(c));
        }

    std::vector<SequenceReport> reports(cells.size());
    const size_t workers = std::min(worker_count(), cells.size());
    std::atomic<size_t> next{0};
    std::vector<std::string> errors(cells.size());
    auto work = [&] {
        for (size_t i = next.fetch_add(1); i < cells.size();
             i = next.fetch_add(1)) {
            try {
                reports[i] = run_cell(cells[i], corpus.tasks,
                                      orders[cells[i].seq_index], embeddings,
                                      config.hp, vocab_hash);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (size_t i = 0; i < cells.size(); ++i)
        if (!errors[i].empty())
            throw NumericError("run " + cells[i].dir.string() + " failed: " +
                               errors[i]);

    ExperimentReport exp = aggregate_experiment(reports);
    write_json(out_dir / "experiment_report.json",
               experiment_report_to_json(exp));
    write_csv_tables(out_dir, exp);
    return exp;
}

void cmd_report(const std::string& run_dir, std::ostream& out) {
    const fs::path dir = run_dir;
    if (!fs::exists(dir / "experiment_report.json"))
        throw DataError("no experiment_report.json in " + run_dir);
    ExperimentReport exp =
        experiment_report_from_json(read_json(dir / "experiment_report.json"));
    write_csv_tables(dir, exp);

    out << "== Average accuracy (All Tasks / Last Task) ==\n";
    for (size_t i = 0; i < exp.models.size(); ++i) {
        out << "  " << exp.models[i] << "  all=" << exp.all_tasks_avg[i]
            << "  last=" << exp.last_task_avg[i];
        if (i > 0 && exp.p_values[i - 1] >= 0.0)
            out << "  p(vs " << exp.models[0] << ")=" << exp.p_values[i - 1];
        out << '\n';
    }

    std::map<std::string, std::vector<SequenceReport>> by_model;
    for (const auto& s : exp.sequences) by_model[s.model].push_back(s);
    const size_t n_tasks =
        exp.sequences.empty() ? 0 : exp.sequences[0].task_order.size();
    out << "== Forward/backward transfer ==\n";
    for (const auto& m : exp.models) {
        for (const auto& row :
             transfer_table(by_model[m], quarter_checkpoints(n_tasks)))
            out << "  " << m << "  first " << row.tasks
                << " tasks: forward=" << row.forward
                << " backward=" << row.backward << '\n';
    }
    out << "CSV tables written to " << (dir / "table1.csv").string() << ", "
        << (dir / "table2.csv").string() << ", "
        << (dir / "table3.csv").string() << '\n';
}

}  // namespace kan
