// Command-line front end: every subcommand is a thin wrapper over one library
// operation, JSON Lines in and out so stages pipe into each other.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"

#include "hopmix/distant_labels.hpp"
#include "hopmix/doc_model.hpp"
#include "hopmix/embed.hpp"
#include "hopmix/errors.hpp"
#include "hopmix/hop_engine.hpp"
#include "hopmix/index.hpp"
#include "hopmix/io_jsonl.hpp"
#include "hopmix/metrics.hpp"
#include "hopmix/rank_heads.hpp"
#include "hopmix/synth.hpp"
#include "hopmix/threads.hpp"
#include "hopmix/throughput.hpp"
#include "hopmix/train.hpp"

namespace {

using namespace hopmix;

std::vector<std::optional<EntryKind>> parse_masks(const std::string& spec) {
    std::vector<std::optional<EntryKind>> masks;
    std::string token;
    std::stringstream ss(spec);
    while (std::getline(ss, token, ',')) {
        if (token == "para")
            masks.emplace_back(EntryKind::Paragraph);
        else if (token == "sent")
            masks.emplace_back(EntryKind::Sentence);
        else if (token == "any")
            masks.emplace_back(std::nullopt);
        else
            throw ValidationError("mask token must be para|sent|any, got '" +
                                  token + "'");
    }
    if (masks.empty()) throw ValidationError("empty mask list");
    return masks;
}

// Unmasked hops for conversational queries; paragraph-then-sentences for
// multi-hop extractive ones.
std::vector<std::optional<EntryKind>> default_masks(const QueryParagraph& query) {
    const std::size_t hops = static_cast<std::size_t>(query.hops());
    std::vector<std::optional<EntryKind>> masks(hops, std::nullopt);
    if (query.kind == QueryKind::MultiHop) {
        masks.assign(hops, EntryKind::Sentence);
        masks[0] = EntryKind::Paragraph;
    }
    return masks;
}

std::vector<std::optional<EntryKind>> masks_for(const std::string& flag,
                                                const QueryParagraph& query) {
    auto masks = flag.empty() ? default_masks(query) : parse_masks(flag);
    if (masks.size() != static_cast<std::size_t>(query.hops()))
        throw ValidationError("mask list has " + std::to_string(masks.size()) +
                              " entries but query '" + query.id + "' has " +
                              std::to_string(query.hops()) + " hops");
    return masks;
}

std::unordered_map<std::string, const StructuredDocument*> doc_lookup(
    const std::vector<StructuredDocument>& docs) {
    std::unordered_map<std::string, const StructuredDocument*> by_id;
    for (const auto& doc : docs) by_id[doc.id] = &doc;
    return by_id;
}

const StructuredDocument& doc_for(
    const std::unordered_map<std::string, const StructuredDocument*>& by_id,
    const std::string& doc_id) {
    auto it = by_id.find(doc_id);
    if (it == by_id.end())
        throw ValidationError("document '" + doc_id + "' not in the corpus");
    return *it->second;
}

IndexRegime parse_regime(const std::string& value) {
    if (value == "agnostic") return IndexRegime::Agnostic;
    if (value == "deferred") return IndexRegime::QueryDependentDeferred;
    throw ValidationError("regime must be agnostic|deferred, got '" + value + "'");
}

struct IngestArgs {
    std::string in, out;
};

void run_ingest(const IngestArgs& a) {
    const auto docs = read_raw_documents(a.in);
    write_documents(docs, a.out);
    std::cerr << "ingested " << docs.size() << " documents\n";
}

struct EmbedArgs {
    std::string docs, out, queries;
    int dim = 64;
};

void run_embed(const EmbedArgs& a) {
    if (a.dim < 1) throw ValidationError("dim must be positive");
    const ToyDeterministicProvider provider(a.dim);
    EmbeddingTable table;
    table.dim = a.dim;

    std::size_t n_sent = 0;
    for (const auto& doc : read_documents(a.docs)) {
        for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
            const auto vecs = embed_sentences(provider, doc.id, doc.paragraphs[pi]);
            for (std::size_t j = 0; j < vecs.size(); ++j)
                table.put(sentence_key(doc.id, static_cast<int>(pi),
                                       static_cast<int>(j)),
                          vecs[j]);
            n_sent += vecs.size();
        }
    }
    std::size_t n_query = 0;
    if (!a.queries.empty()) {
        for (const TrainRow& row : read_train_rows(a.queries)) {
            if (row.query.id.empty())
                throw SchemaError("query without an id cannot be embedded to a table");
            const auto vecs = embed_query_units(provider, row.query);
            for (std::size_t t = 0; t < vecs.size(); ++t)
                table.put(query_unit_key(row.query.id, static_cast<int>(t)), vecs[t]);
            n_query += vecs.size();
        }
    }
    save_embedding_table(table, a.out);
    std::cerr << "embedded " << n_sent << " sentences, " << n_query
              << " query units at dim " << a.dim << "\n";
}

struct IndexArgs {
    std::string docs, embeddings, out_dir;
    std::string regime = "agnostic";
};

void run_index(const IndexArgs& a) {
    const FromFileProvider provider(load_embedding_table(a.embeddings));
    const IndexRegime regime = parse_regime(a.regime);
    std::filesystem::create_directories(a.out_dir);
    std::size_t count = 0;
    for (const auto& doc : read_documents(a.docs)) {
        const CombinedIndex index = build_index(doc, provider, regime);
        save_index(index, a.out_dir + "/" + doc.id + ".hidx");
        ++count;
    }
    std::cerr << "indexed " << count << " documents\n";
}

struct TrainArgs {
    std::string train, docs, embeddings, out;
    std::string mask, regime = "agnostic", multi_positive = "marginal";
    double lr = 0.05;
    int steps = 100;
    std::uint64_t seed = 1;
    double momentum = 0.0;
    bool no_update = false;
};

void run_train(const TrainArgs& a) {
    const FromFileProvider provider(load_embedding_table(a.embeddings));
    const auto docs = read_documents(a.docs);
    const auto by_id = doc_lookup(docs);
    const IndexRegime regime = parse_regime(a.regime);

    std::vector<TrainingInstance> instances;
    std::size_t dropped = 0;
    for (const TrainRow& row : read_train_rows(a.train)) {
        if (row.drop) {
            ++dropped;
            continue;
        }
        instances.push_back(build_training_instance(doc_for(by_id, row.doc_id),
                                                    provider,
                                                    row,
                                                    masks_for(a.mask, row.query),
                                                    regime));
    }
    if (instances.empty()) throw ValidationError("no usable training rows");

    TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.steps = a.steps;
    cfg.seed = a.seed;
    cfg.momentum = a.momentum;
    cfg.update_enabled = !a.no_update;
    if (a.multi_positive == "marginal")
        cfg.multi_positive = MultiPositiveRule::MarginalLog;
    else if (a.multi_positive == "sumce")
        cfg.multi_positive = MultiPositiveRule::SumCE;
    else
        throw ValidationError("multi-positive must be marginal|sumce");

    Rng rng(a.seed);
    MixParams init = MixParams::random(instances.front().dim(), rng, 0.1);
    const FitResult result = fit(instances, std::move(init), cfg);
    save_checkpoint(result.params, a.out);

    std::cerr << "trained on " << instances.size() << " instances (" << dropped
              << " dropped), loss " << result.loss_curve.front() << " -> "
              << result.loss_curve.back() << "\n";
}

struct RetrieveArgs {
    std::string queries, docs, embeddings, params, out;
    std::string mask, regime = "agnostic";
    double lambda1 = 1.5, lambda2 = 3.0;
    bool trace = false;
    bool no_update = false;
};

void run_retrieve(const RetrieveArgs& a) {
    const FromFileProvider provider(load_embedding_table(a.embeddings));
    const auto docs = read_documents(a.docs);
    const auto by_id = doc_lookup(docs);
    const MixParams params = load_checkpoint(a.params);
    const IndexRegime regime = parse_regime(a.regime);

    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw IoError("cannot write output file: " + a.out);

    std::unordered_map<std::string, CombinedIndex> index_cache;
    std::unordered_map<std::string, std::vector<std::string>> para_text_cache;
    RunScratch scratch;

    std::vector<Prediction> predictions;
    for (const TrainRow& row : read_train_rows(a.queries)) {
        const StructuredDocument& doc = doc_for(by_id, row.doc_id);
        auto it = index_cache.find(doc.id);
        if (it == index_cache.end()) {
            it = index_cache.emplace(doc.id, build_index(doc, provider, regime)).first;
            auto& texts = para_text_cache[doc.id];
            for (const Paragraph& p : doc.paragraphs)
                texts.push_back(paragraph_text(p));
        }
        const CombinedIndex& index = it->second;

        QueryState state;
        for (const VecF& v : embed_query_units(provider, row.query))
            state.vectors.push_back(to_double(v));
        const Vec q0 = state.vectors.front();

        RunOptions opts;
        opts.keep_scores = false;
        opts.update_enabled = !a.no_update;
        const RetrievalTrace trace = run_hops(state, index, params,
                                              masks_for(a.mask, row.query),
                                              &scratch, opts);
        if (a.trace) {
            append_trace_lines(out, row.query.id, trace);
            continue;
        }

        const Vec& q_final = state.vectors[static_cast<std::size_t>(state.current_hop)];
        const FusionWeights weights{a.lambda1, a.lambda2};
        auto scores = fused_sentence_scores(q0, q_final, index, weights,
                                            row.query.units.front(),
                                            para_text_cache[doc.id]);
        std::stable_sort(scores.begin(), scores.end(),
                         [](const SentenceScore& x, const SentenceScore& y) {
                             return x.score > y.score;
                         });

        Prediction pred;
        pred.query_id = row.query.id;
        for (const SentenceScore& s : scores)
            pred.ranked.push_back({s.para, s.sent, s.score});
        if (row.query.kind == QueryKind::Conversational) {
            const ClassLogits logits = classify_conversation(trace, params);
            const Vec probs = class_probabilities(logits);
            int best = 0;
            for (int c = 1; c < 4; ++c)
                if (probs[static_cast<std::size_t>(c)] >
                    probs[static_cast<std::size_t>(best)])
                    best = c;
            pred.class_idx = best;
            std::array<double, 4> arr{};
            for (std::size_t c = 0; c < 4; ++c) arr[c] = probs[c];
            pred.class_probs = arr;
        }
        out << prediction_to_json(pred).dump() << '\n';
        predictions.push_back(std::move(pred));
    }
    std::cerr << (a.trace ? "traced " : "ranked ")
              << (a.trace ? std::string("queries") : std::to_string(predictions.size()) + " queries")
              << "\n";
}

struct EvalArgs {
    std::string preds, gold, docs;
    int topk = 2;
    bool strict = false;
};

void run_eval(const EvalArgs& a) {
    const auto predictions = read_predictions(a.preds);
    const auto rows = read_train_rows(a.gold);
    std::map<std::string, const TrainRow*> row_by_id;
    for (const TrainRow& row : rows) row_by_id[row.query.id] = &row;

    std::unordered_map<std::string, const StructuredDocument*> by_id;
    std::vector<StructuredDocument> docs;
    if (!a.docs.empty()) {
        docs = read_documents(a.docs);
        by_id = doc_lookup(docs);
    }

    auto gold_row = [&](const Prediction& pred) -> const TrainRow& {
        auto it = row_by_id.find(pred.query_id);
        if (it == row_by_id.end())
            throw ValidationError("prediction '" + pred.query_id +
                                  "' has no gold row");
        return *it->second;
    };

    // Gold sentences for Hits@1: the sentence labels of the final hop.
    // Evidence sets: every sentence label across hops.
    std::unordered_map<std::string, SentenceSet> top_gold;
    std::vector<SentenceSet> evidence_sets, retrieved_sets;
    std::vector<int> class_preds, class_gold;
    double em_sum = 0.0, f1_sum = 0.0;
    std::size_t n_answers = 0;

    for (const Prediction& pred : predictions) {
        const TrainRow& row = gold_row(pred);

        SentenceSet last_hop, evidence;
        int max_hop = 0;
        for (const auto& [hop, refs] : row.labels) max_hop = std::max(max_hop, hop);
        for (const auto& [hop, refs] : row.labels)
            for (const LabelRef& ref : refs) {
                if (ref.kind != EntryKind::Sentence) continue;
                evidence.insert({ref.para, ref.sent});
                if (hop == max_hop) last_hop.insert({ref.para, ref.sent});
            }
        top_gold[pred.query_id] = last_hop;

        evidence_sets.push_back(std::move(evidence));
        SentenceSet retrieved;
        for (std::size_t r = 0;
             r < pred.ranked.size() && r < static_cast<std::size_t>(a.topk); ++r)
            retrieved.insert({pred.ranked[r].para, pred.ranked[r].sent});
        retrieved_sets.push_back(std::move(retrieved));

        if (pred.class_idx && row.gold_class) {
            class_preds.push_back(*pred.class_idx);
            class_gold.push_back(class_index(*row.gold_class));
        }
        if (!row.answers.empty()) {
            if (a.docs.empty())
                throw ValidationError("answer scoring needs --docs");
            if (pred.ranked.empty())
                throw ValidationError("prediction '" + pred.query_id +
                                      "' ranks no sentences");
            const StructuredDocument& doc = doc_for(by_id, row.doc_id);
            const auto& top = pred.ranked.front();
            if (top.para < 0 ||
                static_cast<std::size_t>(top.para) >= doc.paragraphs.size())
                throw ValidationError("ranked paragraph out of range");
            const auto& sentences =
                doc.paragraphs[static_cast<std::size_t>(top.para)].sentences;
            if (top.sent < 0 ||
                static_cast<std::size_t>(top.sent) >= sentences.size())
                throw ValidationError("ranked sentence out of range");
            const auto [em, f1] =
                em_f1(sentences[static_cast<std::size_t>(top.sent)].text, row.answers);
            em_sum += em;
            f1_sum += f1;
            ++n_answers;
        }
    }

    MetricReport report;
    if (!predictions.empty()) {
        report.hits_at_1 = hits_at_1(predictions, top_gold);
        report.evidence_coverage = evidence_coverage(retrieved_sets, evidence_sets);
    }
    if (!class_preds.empty()) {
        const auto [easy, strict] = strict_accuracy(
            class_preds, class_gold,
            std::vector<SentenceSet>(retrieved_sets.end() - static_cast<std::ptrdiff_t>(class_preds.size()),
                                     retrieved_sets.end()),
            std::vector<SentenceSet>(evidence_sets.end() - static_cast<std::ptrdiff_t>(class_preds.size()),
                                     evidence_sets.end()));
        report.easy_acc = easy;
        report.strict_acc = strict;
    } else if (a.strict) {
        throw ValidationError("--strict needs class predictions and gold classes");
    }
    if (n_answers > 0) {
        report.em = em_sum / static_cast<double>(n_answers);
        report.f1 = f1_sum / static_cast<double>(n_answers);
    }

    std::cout << metric_report_to_json(report).dump() << "\n";
    const auto line = [&](const char* name, const std::optional<double>& v) {
        if (v) std::cerr << "  " << name << ": " << *v << "\n";
    };
    std::cerr << "metrics over " << predictions.size() << " predictions:\n";
    line("hits@1", report.hits_at_1);
    line("evidence coverage", report.evidence_coverage);
    line("em", report.em);
    line("f1", report.f1);
    line("easy accuracy", report.easy_acc);
    line("strict accuracy", report.strict_acc);
}

struct SynthArgs {
    std::string out_dir;
    int docs = 200, paras = 10, sents = 5, dim = 32, hops = 2;
    std::uint64_t seed = 1;
    double train_fraction = 0.8;
};

void run_synth(const SynthArgs& a) {
    SynthSpec spec;
    spec.n_docs = a.docs;
    spec.paras_per_doc = a.paras;
    spec.sents_per_para = a.sents;
    spec.dim = a.dim;
    spec.hops = a.hops;
    spec.seed = a.seed;
    spec.train_fraction = a.train_fraction;

    const SynthDataset ds = synth_generate(spec);
    std::filesystem::create_directories(a.out_dir);

    write_documents(ds.docs, a.out_dir + "/docs.jsonl");
    save_embedding_table(ds.embeddings, a.out_dir + "/embeddings.hmix");
    save_checkpoint(ds.planted, a.out_dir + "/planted.hckp");

    const auto to_rows = [&](const std::vector<SynthQuery>& queries) {
        std::vector<TrainRow> rows;
        for (const SynthQuery& q : queries) {
            TrainRow row;
            row.query = build_multihop_query("planted chain query for " + q.doc_id,
                                             spec.hops, q.id);
            row.doc_id = q.doc_id;
            row.labels[0] = {LabelRef{EntryKind::Paragraph, q.gold_para, -1}};
            for (int t = 1; t < spec.hops; ++t) {
                const auto& gs = q.gold_sentences[static_cast<std::size_t>(t - 1)];
                row.labels[t] = {LabelRef{EntryKind::Sentence, gs.first, gs.second}};
            }
            rows.push_back(std::move(row));
        }
        return rows;
    };
    write_train_rows(to_rows(ds.train), a.out_dir + "/train.jsonl");
    write_train_rows(to_rows(ds.test), a.out_dir + "/test.jsonl");

    std::cerr << "generated " << ds.docs.size() << " documents, "
              << ds.train.size() << " train / " << ds.test.size()
              << " test queries\n";
}

struct BenchArgs {
    int entries = 10000, dim = 128, hops = 2, queries = 1000, batch = 8;
    std::uint64_t seed = 1;
    bool parallel = false;
};

void run_bench(const BenchArgs& a) {
    if (a.entries < 2 || a.dim < 1 || a.hops < 1 || a.queries < 100)
        throw ValidationError("bench needs entries >= 2, dim >= 1, hops >= 1, queries >= 100");
    // The headline figure is single-threaded; --parallel opts into however
    // many threads the environment grants.
    if (!a.parallel) set_threads(1);
    Rng rng(a.seed);

    // Paragraph blocks of nine sentences each until the entry budget is spent.
    CombinedIndex index;
    index.doc_id = "bench";
    index.dim = static_cast<std::uint32_t>(a.dim);
    std::int32_t para = 0;
    while (index.entries.size() < static_cast<std::size_t>(a.entries)) {
        const std::size_t room = static_cast<std::size_t>(a.entries) - index.entries.size();
        const std::uint32_t sents =
            static_cast<std::uint32_t>(std::min<std::size_t>(9, room > 1 ? room - 1 : 1));
        ParaSpan span;
        span.para_entry = static_cast<std::uint32_t>(index.entries.size());
        index.entries.push_back({EntryKind::Paragraph, para, -1});
        span.first_sentence_entry = static_cast<std::uint32_t>(index.entries.size());
        span.n_sentences = sents;
        for (std::uint32_t j = 0; j < sents; ++j)
            index.entries.push_back({EntryKind::Sentence, para, static_cast<std::int32_t>(j)});
        index.paras.push_back(span);
        ++para;
    }
    index.values.resize(index.entries.size() * static_cast<std::size_t>(a.dim));
    for (float& x : index.values) x = static_cast<float>(rng.normal() * 0.3);
    index.validate();

    std::vector<std::vector<Vec>> queries(static_cast<std::size_t>(a.queries));
    for (auto& q : queries) {
        q.resize(static_cast<std::size_t>(a.hops));
        for (Vec& v : q) {
            v.resize(static_cast<std::size_t>(a.dim));
            for (double& x : v) x = rng.normal() * 0.3;
        }
    }
    Rng prng(a.seed + 17);
    const MixParams params = MixParams::random(static_cast<std::size_t>(a.dim), prng, 0.1);

    ThroughputOptions opts;
    opts.batch = a.batch;
    opts.parallel = a.parallel;
    const ThroughputReport report = measure_throughput(index, params, queries, opts);

    nlohmann::json out = {
        {"qps", report.qps},
        {"seconds", report.seconds},
        {"n_queries", report.n_queries},
        {"batch", report.batch},
        {"parallel", report.parallel},
        {"stages",
         {{"score_ms", report.stages.score_ns / 1e6},
          {"mix_ms", report.stages.mix_ns / 1e6},
          {"update_ms", report.stages.update_ns / 1e6}}},
        {"checksum", report.checksum},
    };
    std::cout << out.dump() << "\n";
    std::cerr << "bench: " << report.qps << " qps over " << report.n_queries
              << " queries (batch " << report.batch
              << (report.parallel ? ", parallel" : ", single-threaded") << ")\n"
              << "  score: " << report.stages.score_ns / 1e6 << " ms\n"
              << "  mix:   " << report.stages.mix_ns / 1e6 << " ms\n"
              << "  update:" << report.stages.update_ns / 1e6 << " ms\n";
}

}  // namespace

int main(int argc, char** argv) {
    hopmix::init_threads_from_env();

    CLI::App app{"hierarchical multi-hop dense retrieval over combined paragraph+sentence indexes"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* cmd_ingest = app.add_subcommand("ingest", "normalize raw tables/papers/documents to document JSON Lines");
    cmd_ingest->add_option("--in", ingest.in, "raw records, one JSON object per line")->required();
    cmd_ingest->add_option("--out", ingest.out, "document JSONL output")->required();
    cmd_ingest->callback([&] { run_ingest(ingest); });

    EmbedArgs embed;
    auto* cmd_embed = app.add_subcommand("embed", "embed documents (and query units) into an embedding table");
    cmd_embed->add_option("--docs", embed.docs, "document JSONL")->required();
    cmd_embed->add_option("--out", embed.out, "embedding table output (.hmix)")->required();
    cmd_embed->add_option("--queries", embed.queries, "training rows whose query units should be embedded too");
    cmd_embed->add_option("--dim", embed.dim, "embedding width");
    cmd_embed->callback([&] { run_embed(embed); });

    IndexArgs index;
    auto* cmd_index = app.add_subcommand("index", "build one combined index per document");
    cmd_index->add_option("--docs", index.docs, "document JSONL")->required();
    cmd_index->add_option("--embeddings", index.embeddings, "embedding table (.hmix)")->required();
    cmd_index->add_option("--out-dir", index.out_dir, "directory for {doc_id}.hidx files")->required();
    cmd_index->add_option("--regime", index.regime, "agnostic|deferred paragraph vectors");
    cmd_index->callback([&] { run_index(index); });

    TrainArgs train;
    auto* cmd_train = app.add_subcommand("train", "fit mixing parameters on labeled rows");
    cmd_train->add_option("--train", train.train, "training rows JSONL")->required();
    cmd_train->add_option("--docs", train.docs, "document JSONL")->required();
    cmd_train->add_option("--embeddings", train.embeddings, "embedding table (.hmix)")->required();
    cmd_train->add_option("--out", train.out, "checkpoint output (.hckp)")->required();
    cmd_train->add_option("--mask", train.mask, "per-hop candidate filter, comma list of para|sent|any");
    cmd_train->add_option("--regime", train.regime, "agnostic|deferred paragraph vectors");
    cmd_train->add_option("--multi-positive", train.multi_positive, "marginal|sumce");
    cmd_train->add_option("--lr", train.lr, "learning rate");
    cmd_train->add_option("--steps", train.steps, "full-batch steps");
    cmd_train->add_option("--seed", train.seed, "init/seed");
    cmd_train->add_option("--momentum", train.momentum, "SGD momentum (0 disables)");
    cmd_train->add_flag("--no-update", train.no_update, "disable the residual query update");
    cmd_train->callback([&] { run_train(train); });

    RetrieveArgs retrieve;
    auto* cmd_retrieve = app.add_subcommand("retrieve", "run the hop loop and rank sentences");
    cmd_retrieve->add_option("--queries", retrieve.queries, "query rows JSONL")->required();
    cmd_retrieve->add_option("--docs", retrieve.docs, "document JSONL")->required();
    cmd_retrieve->add_option("--embeddings", retrieve.embeddings, "embedding table (.hmix)")->required();
    cmd_retrieve->add_option("--params", retrieve.params, "checkpoint (.hckp)")->required();
    cmd_retrieve->add_option("--out", retrieve.out, "predictions (or trace) JSONL output")->required();
    cmd_retrieve->add_option("--mask", retrieve.mask, "per-hop candidate filter, comma list of para|sent|any");
    cmd_retrieve->add_option("--regime", retrieve.regime, "agnostic|deferred paragraph vectors");
    cmd_retrieve->add_option("--lambda1", retrieve.lambda1, "paragraph-score fusion weight");
    cmd_retrieve->add_option("--lambda2", retrieve.lambda2, "common-substring fusion weight");
    cmd_retrieve->add_flag("--trace", retrieve.trace, "emit per-hop trace lines instead of predictions");
    cmd_retrieve->add_flag("--no-update", retrieve.no_update, "disable the residual query update");
    cmd_retrieve->callback([&] { run_retrieve(retrieve); });

    EvalArgs eval;
    auto* cmd_eval = app.add_subcommand("eval", "score predictions against gold rows");
    cmd_eval->add_option("--preds", eval.preds, "prediction JSONL")->required();
    cmd_eval->add_option("--gold", eval.gold, "gold rows JSONL")->required();
    cmd_eval->add_option("--docs", eval.docs, "document JSONL (needed for answer text scoring)");
    cmd_eval->add_option("--topk", eval.topk, "ranked prefix treated as the retrieved set");
    cmd_eval->add_flag("--strict", eval.strict, "require class accuracy (fails without class data)");
    cmd_eval->callback([&] { run_eval(eval); });

    SynthArgs synth;
    auto* cmd_synth = app.add_subcommand("synth", "generate the planted-chain benchmark");
    cmd_synth->add_option("--out-dir", synth.out_dir, "output directory")->required();
    cmd_synth->add_option("--docs", synth.docs, "number of documents (one query each)");
    cmd_synth->add_option("--paras", synth.paras, "paragraphs per document");
    cmd_synth->add_option("--sents", synth.sents, "sentences per paragraph");
    cmd_synth->add_option("--dim", synth.dim, "embedding width");
    cmd_synth->add_option("--hops", synth.hops, "chain length");
    cmd_synth->add_option("--seed", synth.seed, "generator seed");
    cmd_synth->add_option("--train-fraction", synth.train_fraction, "train split share");
    cmd_synth->callback([&] { run_synth(synth); });

    BenchArgs bench;
    auto* cmd_bench = app.add_subcommand("bench", "hop-loop throughput on a synthetic index");
    cmd_bench->add_option("--entries", bench.entries, "index entries");
    cmd_bench->add_option("--dim", bench.dim, "embedding width");
    cmd_bench->add_option("--hops", bench.hops, "hops per query");
    cmd_bench->add_option("--queries", bench.queries, "number of queries");
    cmd_bench->add_option("--batch", bench.batch, "sequential batch size");
    cmd_bench->add_option("--seed", bench.seed, "data seed");
    cmd_bench->add_flag("--parallel", bench.parallel, "fan queries out over threads");
    cmd_bench->callback([&] { run_bench(bench); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const hopmix::TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hopmix::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
