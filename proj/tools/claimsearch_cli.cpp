// claimsearch: runs the novelty-search pipeline stage by stage.
//
//   ingest     read + class-filter corpora, draw training/pretest/search groups
//   slice      cut the descriptions of grouped patents into word pieces
//   gen-pairs  label-1/label-0 training pairs and a validation hold-out
//   pretest    pair-level F1 and own-description rank on the pretest group
//   search     rank the search group against each configured query claim
//   report     cited-X positions from the search audit tables

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "claimsearch/claimsearch.hpp"

namespace fs = std::filesystem;
using namespace claimsearch;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string backend;
    std::string mode;
    bool exclude_self = false;
};

struct Context {
    PipelineConfig cfg;
    std::string stage;

    jsonl::Json meta() const {
        jsonl::Json m;
        m["tool"] = "claimsearch";
        m["stage"] = stage;
        m["config"] = config_to_json(cfg);
        return m;
    }
    fs::path out(const std::string& name) const { return cfg.output_dir / name; }
};

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("missing_input", "cannot open " + p.string() + " (run the earlier stage first?)");
    return in;
}

std::ofstream open_out(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("io", "cannot write " + p.string());
    return out;
}

std::string file_stem_for(const std::string& id) {
    std::string s;
    for (char c : id) s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
    return s;
}

Corpus load_stage_corpus(const Context& ctx) {
    auto in = open_in(ctx.out("corpus.jsonl"));
    return ingest(in);
}

Groups load_groups(const Context& ctx) {
    auto in = open_in(ctx.out("groups.json"));
    try {
        const auto j = jsonl::Json::parse(in);
        return groups_from_json(j.at("groups"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("groups.json: " + std::string(e.what()));
    }
}

PieceTable load_pieces(const Context& ctx) {
    auto in = open_in(ctx.out("pieces.jsonl"));
    return import_pieces(in);
}

void cmd_ingest(const Context& ctx) {
    if (ctx.cfg.corpus_paths.empty()) throw ConfigError("config lists no corpus files");
    Corpus all;
    for (const auto& path : ctx.cfg.corpus_paths) {
        auto in = open_in(path);
        for (auto& p : ingest(in)) all.add(p);
    }
    const Corpus corpus = ctx.cfg.class_prefix.empty() ? all : filter_by_class(all, ctx.cfg.class_prefix);
    const auto groups = assign_groups(corpus, ctx.cfg.group_sizes, ctx.cfg.group_seed, ctx.cfg.must_include_search);

    auto out = open_out(ctx.out("corpus.jsonl"));
    export_corpus(out, corpus, ctx.meta());
    jsonl::Json g;
    g["meta"] = ctx.meta();
    g["groups"] = groups_to_json(groups);
    open_out(ctx.out("groups.json")) << g.dump(2) << '\n';

    std::size_t overlap = 0;
    for (const auto& id : groups.search.patent_ids) overlap += groups.training.contains(id);
    std::cout << "ingest: " << all.size() << " patents read, " << corpus.size() << " after class filter; groups "
              << "training=" << groups.training.size() << " pretest=" << groups.pretest.size()
              << " search=" << groups.search.size() << " (training/search overlap " << overlap << ")\n";
}

void cmd_slice(const Context& ctx) {
    const auto corpus = load_stage_corpus(ctx);
    const auto groups = load_groups(ctx);
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto* g : {&groups.training, &groups.pretest, &groups.search}) {
        for (const auto& id : g->patent_ids) {
            if (seen.insert(id).second) ids.push_back(id);
        }
    }
    const auto table = slice_corpus(corpus.subset(ids), ctx.cfg.slice);
    auto out = open_out(ctx.out("pieces.jsonl"));
    export_pieces(out, table, ctx.meta());

    auto count = [&](const CorpusGroup& g) {
        std::size_t n = 0;
        for (const auto& id : g.patent_ids) n += table.find(id)->size();
        return n;
    };
    std::cout << "slice: " << table.patent_count() << " patents, " << table.total_pieces() << " pieces (training "
              << count(groups.training) << ", pretest " << count(groups.pretest) << ", search "
              << count(groups.search) << ")\n";
}

void cmd_gen_pairs(const Context& ctx) {
    const auto corpus = load_stage_corpus(ctx);
    const auto groups = load_groups(ctx);
    const auto pieces = load_pieces(ctx).subset(groups.training.patent_ids);
    auto positives = build_positive_pairs(pieces, corpus);
    auto negatives = build_negative_pairs(positives, ctx.cfg.pairs_seed);
    std::vector<PairInput> all;
    all.reserve(positives.size() + negatives.size());
    for (auto& p : positives) all.push_back(fit_to_budget(std::move(p), ctx.cfg.assembly));
    for (auto& p : negatives) all.push_back(fit_to_budget(std::move(p), ctx.cfg.assembly));
    const auto split = split_validation(all, ctx.cfg.validation_fraction, ctx.cfg.pairs_seed);

    auto train = open_out(ctx.out("train.jsonl"));
    export_pairs(train, split.training, ctx.cfg.assembly, ctx.meta());
    auto val = open_out(ctx.out("validation.jsonl"));
    export_pairs(val, split.validation, ctx.cfg.assembly, ctx.meta());

    std::size_t ones = 0;
    for (const auto& p : all) ones += p.label == 1;
    std::cout << "gen-pairs: " << all.size() << " pairs (label1=" << ones << " label0=" << all.size() - ones
              << ") from " << pieces.total_pieces() << " pieces; training=" << split.training.size()
              << " validation=" << split.validation.size() << "\n";
}

void cmd_pretest(const Context& ctx) {
    const auto corpus = load_stage_corpus(ctx);
    const auto groups = load_groups(ctx);
    const auto classifier = make_classifier(ctx.cfg.classifier_backend());
    PretestConfig pc;
    pc.slice = ctx.cfg.slice;
    pc.assembly = ctx.cfg.assembly;
    pc.seed = ctx.cfg.pairs_seed;
    pc.mode = ctx.cfg.mode;
    const auto result = pretest(corpus.subset(groups.pretest.patent_ids), pc, *classifier, &groups.training);

    jsonl::Json j;
    j["meta"] = ctx.meta();
    j["pairs"] = result.n_pairs;
    j["confusion"] = {{"tp", result.counts.tp}, {"fp", result.counts.fp}, {"tn", result.counts.tn}, {"fn", result.counts.fn}};
    j["precision"] = result.pair_f1.precision;
    j["recall"] = result.pair_f1.recall;
    j["f1"] = result.pair_f1.f1;
    j["f1_degenerate"] = result.pair_f1.degenerate;
    j["own_first"] = result.own_first();
    j["patents"] = result.patents.size();
    auto rows = jsonl::Json::array();
    for (const auto& r : result.patents) {
        jsonl::Json row;
        row["patent_id"] = r.patent_id;
        row["own_rank"] = r.own_rank ? jsonl::Json(*r.own_rank) : jsonl::Json(nullptr);
        row["own_score"] = r.own_score;
        row["n_ranked"] = r.n_ranked;
        rows.push_back(std::move(row));
    }
    j["patent_level"] = rows;
    open_out(ctx.out("pretest.json")) << j.dump(2) << '\n';
    auto md = open_out(ctx.out("pretest.md"));
    write_pretest_markdown(md, result, ctx.meta());

    std::vector<AuditRow> audit;
    for (const auto& r : result.pair_audit) audit.push_back({r, true});
    auto au = open_out(ctx.out("pretest_audit.jsonl"));
    export_audit(au, audit, ctx.meta());

    std::cout << "pretest: " << result.n_pairs << " pairs, F1=" << text::format_double(result.pair_f1.f1)
              << ", own description first for " << result.own_first() << "/" << result.patents.size()
              << " claims\n";
}

SearchJob make_job(const Context& ctx, const Corpus& corpus, const Groups& groups, const QuerySpec& q) {
    SearchJob job;
    job.claim_source_id = q.reference_id;
    if (!q.claim.empty()) {
        job.claim_of_interest = q.claim;
    } else {
        const auto* p = corpus.find(q.reference_id);
        if (p == nullptr) {
            throw MissingIdError(q.reference_id, "corpus; give the query a literal \"claim\" instead");
        }
        job.claim_of_interest = p->first_claim;
    }
    job.target_group = groups.search;
    job.slice_config = ctx.cfg.slice;
    job.assembly_config = ctx.cfg.assembly;
    job.mode = ctx.cfg.mode;
    job.exclude_self = ctx.cfg.exclude_self;
    return job;
}

void cmd_search(const Context& ctx) {
    if (ctx.cfg.queries.empty()) throw ConfigError("config lists no queries");
    const auto corpus = load_stage_corpus(ctx);
    const auto groups = load_groups(ctx);
    const auto pieces = load_pieces(ctx);
    const auto classifier = make_classifier(ctx.cfg.classifier_backend());

    for (const auto& q : ctx.cfg.queries) {
        const auto job = make_job(ctx, corpus, groups, q);
        const auto stem = "search/" + file_stem_for(q.reference_id);
        try {
            const auto outcome = run_search(job, pieces, *classifier);
            auto au = open_out(ctx.out(stem + ".audit.jsonl"));
            export_audit(au, outcome.audit, ctx.meta());
            auto csv = open_out(ctx.out(stem + ".ranking.csv"));
            export_ranking_csv(csv, outcome.ranking, ctx.meta());
            auto js = open_out(ctx.out(stem + ".ranking.json"));
            export_ranking_json(js, outcome.ranking, ctx.meta());
            for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "search " << q.reference_id << ": " << outcome.audit.size() << " pairs, "
                      << outcome.ranking.entries.size() << " patents ranked, top "
                      << outcome.ranking.entries.front().patent_id << "\n";
        } catch (const SearchFailed& e) {
            auto au = open_out(ctx.out(stem + ".audit.jsonl"));
            export_audit(au, e.audit(), ctx.meta());
            fs::remove(ctx.out(stem + ".ranking.csv"));
            fs::remove(ctx.out(stem + ".ranking.json"));
            throw;
        }
    }
}

void cmd_report(const Context& ctx) {
    if (ctx.cfg.cited_x.empty()) throw ConfigError("config has no cited_x entries");
    const auto groups = load_groups(ctx);
    std::vector<ReferenceRanking> rankings;
    for (const auto& q : ctx.cfg.queries) {
        auto in = open_in(ctx.out("search/" + file_stem_for(q.reference_id) + ".audit.jsonl"));
        const auto audit = import_audit(in);
        CorpusGroup target = groups.search;
        if (ctx.cfg.exclude_self) std::erase(target.patent_ids, q.reference_id);
        rankings.push_back({q.reference_id, rank_from_audit(audit, ctx.cfg.mode, q.reference_id), target});
    }
    const auto report = x_position_report(rankings, ctx.cfg.cited_x);
    auto csv = open_out(ctx.out("report.csv"));
    write_x_report_csv(csv, report, ctx.meta());
    auto md = open_out(ctx.out("report.md"));
    write_x_report_markdown(md, report, ctx.meta());
    md << '\n';
    write_reference_table_markdown(md, ctx.cfg.cited_x);
    write_x_report_markdown(std::cout, report);
}

void emit_error(const std::string& stage, const std::string& code, const std::string& message,
                const std::vector<std::string>& failed = {}) {
    jsonl::Json err;
    err["code"] = code;
    err["message"] = message;
    err["subcommand"] = stage;
    if (!failed.empty()) err["failed_pair_ids"] = failed;
    jsonl::Json rec;
    rec["error"] = err;
    std::cerr << rec.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"claimsearch: claim-to-description novelty search pipeline"};
    app.require_subcommand(1);
    Options opt;

    struct Stage {
        const char* name;
        const char* help;
        void (*run)(const Context&);
    };
    const Stage stages[] = {
        {"ingest", "read corpora, filter by class, assign groups", cmd_ingest},
        {"slice", "slice descriptions of grouped patents into pieces", cmd_slice},
        {"gen-pairs", "build balanced training pairs and a validation split", cmd_gen_pairs},
        {"pretest", "pair-level F1 and own-description rank on the pretest group", cmd_pretest},
        {"search", "rank the search group for each query claim", cmd_search},
        {"report", "cited X positions from search audit tables", cmd_report},
    };
    std::vector<std::pair<CLI::App*, const Stage*>> subs;
    for (const auto& st : stages) {
        auto* sub = app.add_subcommand(st.name, st.help);
        sub->add_option("--config", opt.config_path, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "override every seed");
        sub->add_option("--backend", opt.backend, "baseline | remote:<url>");
        sub->add_option("--mode", opt.mode, "label | sigmoid")->check(CLI::IsMember({"label", "sigmoid"}));
        sub->add_flag("--exclude-self", opt.exclude_self, "drop the query's own patent from the search group");
        subs.emplace_back(sub, &st);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const Stage* stage = nullptr;
    for (auto& [sub, st] : subs) {
        if (sub->parsed()) stage = st;
    }

    Context ctx;
    ctx.stage = stage->name;
    try {
        ctx.cfg = load_config(opt.config_path);
        if (opt.seed) ctx.cfg.override_seed(*opt.seed);
        if (!opt.backend.empty()) ctx.cfg.backend = opt.backend;
        if (!opt.mode.empty()) ctx.cfg.mode = parse_scoring_mode(opt.mode);
        if (opt.exclude_self) ctx.cfg.exclude_self = true;
        stage->run(ctx);
    } catch (const BackendError& e) {
        emit_error(ctx.stage, e.code(), e.what(), e.failed_pair_ids());
        return 1;
    } catch (const Error& e) {
        emit_error(ctx.stage, e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error(ctx.stage, "internal", e.what());
        return 1;
    }
    return 0;
}
