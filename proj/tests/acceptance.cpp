// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "claimsearch/claimsearch.hpp"
#include "support/stub_server.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace claimsearch;

namespace {

struct Verdict {
    std::string detail;
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok && failures.size() < 5) failures.push_back(what);
        if (!ok && failures.size() == 5) failures.push_back("...");
    }
};

// Words mixing ASCII and multi-byte characters; separators are ASCII
// whitespace so the stream tokenizer serves as an independent oracle.
std::string random_description(Rng& rng, std::size_t n) {
    static const char* pool[] = {"claim", "piece", "Übertragung", "naïve", "日本語", "x", "42", "a-b", "(c)", "ünd"};
    static const char* seps[] = {" ", "  ", "\t", "\n", " \r\n "};
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += seps[rng.uniform(0, 4)];
        out += pool[rng.uniform(0, 9)];
        out += std::to_string(i % 97);
    }
    if (rng.uniform(0, 1)) out += "\n";
    return out;
}

Patent random_patent(Rng& rng, const std::string& id, std::size_t words) {
    Patent p;
    p.patent_id = id;
    p.first_claim = "A system for " + id + " comprising " + random_description(rng, rng.uniform(3, 20)) + ".";
    p.description = random_description(rng, words);
    return p;
}

SliceConfig random_slice_config(Rng& rng) {
    const auto lo = rng.uniform(5, 120);
    return {lo, lo + rng.uniform(0, 100), rng.next()};
}

// A corpus of 2..50 patents whose pieces admit a cross-patent pairing.
struct RandomCorpus {
    Corpus corpus;
    PieceTable table;
    SliceConfig config;
};

RandomCorpus random_feasible_corpus(Rng& rng, std::size_t& redraws) {
    for (;;) {
        const auto n = rng.uniform(2, 50);
        const auto cfg = random_slice_config(rng);
        Corpus c;
        const auto two_equal = n == 2 ? rng.uniform(1, 2000) : 0;
        for (std::size_t i = 0; i < n; ++i) {
            c.add(random_patent(rng, "R" + std::to_string(i), n == 2 ? two_equal : rng.uniform(10, 2000)));
        }
        auto table = slice_corpus(c, cfg);
        std::size_t largest = 0;
        for (const auto& e : table.entries()) largest = std::max(largest, e.pieces.size());
        if (2 * largest <= table.total_pieces()) return {std::move(c), std::move(table), cfg};
        ++redraws;
    }
}

Verdict slicer_round_trip() {
    Verdict v;
    Rng rng(1001);
    std::size_t total_pieces = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = rng.uniform(10, 5000);
        const auto p = random_patent(rng, "S" + std::to_string(i), n);
        const auto cfg = random_slice_config(rng);
        const auto pieces = slice(p, cfg);
        std::vector<std::string> joined;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            const auto w = testsupport::stream_words(pieces[k].text);
            joined.insert(joined.end(), w.begin(), w.end());
            v.expect(pieces[k].piece_index == k, "piece index out of sequence");
            v.expect(w.size() == pieces[k].word_count, "word_count disagrees with the piece text");
            if (k + 1 < pieces.size()) {
                v.expect(w.size() >= cfg.min_len && w.size() <= cfg.max_len,
                         "non-final piece of " + std::to_string(w.size()) + " words outside [" +
                             std::to_string(cfg.min_len) + "," + std::to_string(cfg.max_len) + "]");
            } else {
                v.expect(!w.empty() && w.size() <= cfg.max_len, "final piece empty or too long");
            }
        }
        const auto expected = testsupport::stream_words(p.description);
        v.expect(expected.size() == n, "generator produced the wrong word count");
        v.expect(joined == expected, "joined pieces differ from the description words (" + p.patent_id + ")");
        total_pieces += pieces.size();
    }
    v.detail = "1000 descriptions, " + std::to_string(total_pieces) + " pieces";
    return v;
}

Verdict pair_balance() {
    Verdict v;
    Rng rng(2002);
    std::size_t redraws = 0, total = 0;
    for (int round = 0; round < 100; ++round) {
        const auto [corpus, table, cfg] = random_feasible_corpus(rng, redraws);
        const auto pos = build_positive_pairs(table, corpus);
        const auto neg = build_negative_pairs(pos, rng.next());
        total += pos.size() + neg.size();
        v.expect(pos.size() == neg.size(), "label counts differ");

        // Multisets by brute force: claims keyed by (patent, text), pieces by (patent, index, text).
        std::map<std::pair<std::string, std::string>, long> claims;
        std::map<std::tuple<std::string, std::size_t, std::string>, long> pieces;
        for (const auto& p : pos) {
            v.expect(p.label == 1 && p.claim_patent_id == p.piece_patent_id, "bad positive pair");
            v.expect(p.claim_text == corpus.at(p.claim_patent_id).first_claim, "positive claim text mismatch");
            ++claims[{p.claim_patent_id, p.claim_text}];
            ++pieces[{p.piece_patent_id, p.piece_index, p.piece_text}];
        }
        v.expect(pos.size() == table.total_pieces(), "positives do not cover every piece once");
        for (const auto& p : neg) {
            v.expect(p.label == 0, "negative pair without label 0");
            v.expect(p.claim_patent_id != p.piece_patent_id, "same-patent negative " + p.pair_id);
            --claims[{p.claim_patent_id, p.claim_text}];
            --pieces[{p.piece_patent_id, p.piece_index, p.piece_text}];
        }
        for (const auto& [k, n] : claims) v.expect(n == 0, "claim multiset not conserved for " + k.first);
        for (const auto& [k, n] : pieces) v.expect(n == 0, "piece multiset not conserved for " + std::get<0>(k));
    }
    v.detail = "100 corpora, " + std::to_string(total) + " pairs, " + std::to_string(redraws) +
               " infeasible draws skipped";
    return v;
}

Verdict count_identities() {
    Verdict v;
    Rng rng(3003);
    std::size_t redraws = 0;
    for (int round = 0; round < 20; ++round) {
        const auto [corpus, table, cfg] = random_feasible_corpus(rng, redraws);
        // Piece count from re-slicing each patent on its own.
        std::size_t sum = 0;
        for (const auto& p : corpus) sum += slice(p, cfg).size();
        const auto pos = build_positive_pairs(table, corpus);
        const auto neg = build_negative_pairs(pos, round);
        v.expect(pos.size() + neg.size() == 2 * sum, "training pairs != 2 * pieces");

        SearchJob job;
        job.claim_of_interest = "A query claim with a few words.";
        for (const auto& p : corpus) job.target_group.patent_ids.push_back(p.patent_id);
        const auto queries = build_query_inputs(job, table);
        v.expect(queries.size() == sum, "search inputs != pieces");
    }
    v.detail = "20 corpora";
    return v;
}

Verdict scoring_oracle() {
    Verdict v;
    Rng rng(4004);
    double worst = 0;
    for (int round = 0; round < 100; ++round) {
        const auto n_patents = rng.uniform(1, 10);
        std::vector<PieceResult> rows;
        std::map<std::string, std::vector<double>> probs;
        for (std::size_t i = 0; i < n_patents; ++i) {
            const std::string id = "T" + std::to_string(i);
            const auto n = rng.uniform(1, 20);
            for (std::size_t k = 0; k < n; ++k) {
                // Mix exact boundary values into the draws.
                double p = rng.unit();
                const auto pick = rng.uniform(0, 9);
                if (pick == 0) p = 0.5;
                if (pick == 1) p = 0.0;
                if (pick == 2) p = 1.0;
                rows.push_back({id + "#" + std::to_string(k), id, k, p, decide_label(p)});
                probs[id].push_back(p);
            }
        }
        auto shuffled = rows;
        rng.shuffle(std::span<PieceResult>(shuffled));
        const auto scores = score_pieces(shuffled);
        v.expect(scores.size() == probs.size(), "patent count mismatch");
        for (const auto& s : scores) {
            const auto& ps = probs.at(s.patent_id);
            long ones = 0;
            long double sum = 0;
            for (double p : ps) {
                ones += p >= 0.5 ? 1 : 0;
                sum += p;
            }
            const long n = static_cast<long>(ps.size());
            v.expect(static_cast<long>(s.n_label1) == ones && static_cast<long>(s.n_label0) == n - ones,
                     "label counts differ for " + s.patent_id);
            // Rational check: the stored score is the correctly rounded n1/n.
            v.expect(s.score_label == static_cast<double>(ones) / static_cast<double>(n),
                     "label score is not n1/n for " + s.patent_id);
            v.expect(s.score_label * static_cast<double>(n) == static_cast<double>(ones) ||
                         std::abs(s.score_label * n - ones) < 1e-12,
                     "label score does not invert to n1");
            const double err = std::abs(static_cast<long double>(s.score_sigmoid) - sum / n);
            worst = std::max(worst, err);
            v.expect(err <= 1e-12, "sigmoid score off by " + text::format_double(err));
        }
        const auto r = rank(scores, ScoringMode::sigmoid);
        for (std::size_t i = 0; i + 1 < r.entries.size(); ++i) {
            const auto& a = r.entries[i];
            const auto& b = r.entries[i + 1];
            v.expect(a.score_sigmoid > b.score_sigmoid || (a.score_sigmoid == b.score_sigmoid && a.patent_id < b.patent_id),
                     "ranking order violated");
        }
    }
    v.detail = "100 tables, max sigmoid error " + text::format_double(worst);
    return v;
}

Verdict density() {
    Verdict v;
    auto score_at = [](std::size_t n) {
        std::vector<PieceResult> rows;
        for (std::size_t k = 0; k < n; ++k) {
            const double p = k == 0 ? 1.0 : 0.0;
            rows.push_back({"D#" + std::to_string(k), "D", k, p, decide_label(p)});
        }
        return score_pieces(rows).at(0).score_label;
    };
    const double s40 = score_at(40), s5 = score_at(5);
    v.expect(s40 == 0.025, "n=40 gives " + text::format_double(s40));
    v.expect(s5 == 0.2, "n=5 gives " + text::format_double(s5));
    v.expect(s40 < s5, "n=40 not below n=5");
    double prev = score_at(1);
    for (std::size_t n = 2; n <= 200; ++n) {
        const double s = score_at(n);
        v.expect(s < prev, "not strictly decreasing at n=" + std::to_string(n));
        prev = s;
    }
    v.detail = "k=1: n=5 -> " + text::format_double(s5) + ", n=40 -> " + text::format_double(s40);
    return v;
}

Verdict planted_pretest() {
    Verdict v;
    const auto corpus = testsupport::planted_corpus(6006, {.patents = 30});
    PretestConfig cfg;
    cfg.slice = {100, 200, 6};
    cfg.seed = 6;
    const auto r = pretest(corpus, cfg, LexicalBaseline());
    v.expect(r.patents.size() == 30, "pretest covered " + std::to_string(r.patents.size()) + " patents");
    v.expect(r.own_first() == 30, "own description first for " + std::to_string(r.own_first()) + "/30");
    v.expect(r.pair_f1.f1 >= 0.9, "pair F1 " + text::format_double(r.pair_f1.f1));
    v.detail = "own first " + std::to_string(r.own_first()) + "/30, pair F1 " + text::format_double(r.pair_f1.f1) +
               " over " + std::to_string(r.n_pairs) + " pairs";
    return v;
}

Verdict planted_x_search() {
    Verdict v;
    const auto corpus = testsupport::planted_corpus(7007, {.patents = 50});
    CorpusGroup group{GroupName::search, {}};
    for (const auto& p : corpus) group.patent_ids.push_back(p.patent_id);
    const LexicalBaseline baseline;
    std::size_t checked = 0;
    for (const auto& q : corpus) {
        for (auto mode : {ScoringMode::label, ScoringMode::sigmoid}) {
            SearchJob job;
            job.claim_of_interest = q.first_claim;
            job.target_group = group;
            job.slice_config = {100, 200, 7};
            job.mode = mode;
            const auto out = run_search(job, corpus, baseline);
            const auto pos = position_of(out.ranking, q.patent_id);
            v.expect(out.ranking.entries.size() == 50, "ranking does not cover the 50-patent group");
            v.expect(pos == 1u, q.patent_id + " at position " + (pos ? std::to_string(*pos) : "none") + " (" +
                                    to_string(mode) + ")");
            ++checked;
        }
    }
    v.detail = std::to_string(checked / 2) + " query patents x 2 modes, group of 50";
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    Verdict v;
    const auto dir = fs::temp_directory_path() / "claimsearch_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto cfg = jsonl::Json::parse(slurp(fs::path(CLAIMSEARCH_DATA_DIR) / "toy_config.json"));
    cfg["corpus"] = {(fs::path(CLAIMSEARCH_DATA_DIR) / "toy_corpus.jsonl").string()};
    cfg["cited_x"] = jsonl::Json::parse(slurp(fs::path(CLAIMSEARCH_DATA_DIR) / "toy_cited_x.json"));
    cfg["output_dir"] = (dir / "out").string();
    std::ofstream(dir / "config.json") << cfg.dump(2);

    auto pipeline = [&](const char* mode) {
        fs::remove_all(dir / "out");
        for (const char* stage : {"ingest", "slice", "gen-pairs", "search", "report"}) {
            const std::string cmd = std::string("\"") + CLAIMSEARCH_CLI + "\" " + stage + " --config \"" +
                                    (dir / "config.json").string() + "\" --mode " + mode + " >/dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return std::map<std::string, std::string>{};
        }
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(dir / "out")) {
            if (e.is_regular_file()) files[fs::relative(e.path(), dir / "out").string()] = slurp(e.path());
        }
        return files;
    };

    std::size_t rankings = 0;
    for (const char* mode : {"label", "sigmoid"}) {
        const auto a = pipeline(mode);
        const auto b = pipeline(mode);
        v.expect(!a.empty(), std::string("pipeline failed (") + mode + ")");
        v.expect(a.size() == b.size(), "different file sets across runs");
        for (const auto& [name, body] : a) {
            if (name.find(".ranking.") != std::string::npos) ++rankings;
            v.expect(b.count(name) && b.at(name) == body, name + " differs across runs (" + mode + ")");
        }
    }

    // In-process, independent of the CLI.
    const auto corpus = testsupport::planted_corpus(8008, {.patents = 20});
    auto export_once = [&] {
        SearchJob job;
        job.claim_of_interest = corpus.patents()[3].first_claim;
        for (const auto& p : corpus) job.target_group.patent_ids.push_back(p.patent_id);
        job.slice_config = {100, 200, 8};
        job.mode = ScoringMode::sigmoid;
        const auto out = run_search(job, corpus, LexicalBaseline());
        std::ostringstream s;
        export_ranking_csv(s, out.ranking);
        export_ranking_json(s, out.ranking);
        return s.str();
    };
    v.expect(export_once() == export_once(), "in-process ranking exports differ");
    fs::remove_all(dir);
    v.detail = std::to_string(rankings) + " ranking files compared byte for byte across repeated runs";
    return v;
}

std::vector<PairInput> conformance_pairs(std::size_t n) {
    const auto corpus = testsupport::planted_corpus(9009, {.patents = 4, .min_description_words = 300,
                                                           .max_description_words = 600});
    SearchJob job;
    job.claim_of_interest = corpus.patents()[0].first_claim;
    for (const auto& p : corpus) job.target_group.patent_ids.push_back(p.patent_id);
    job.slice_config = {20, 40, 9};
    auto pairs = build_query_inputs(job, corpus);
    pairs.resize(std::min(n, pairs.size()));
    return pairs;
}

RemoteClassifier client(const testsupport::StubServer& s, std::size_t batch, std::size_t in_flight = 1,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(3000)) {
    return RemoteClassifier({s.url(), batch, timeout, in_flight});
}

template <typename E>
bool raises(const std::function<void()>& f, std::size_t expected_ids) {
    try {
        f();
    } catch (const E& e) {
        return e.failed_pair_ids().size() == expected_ids;
    } catch (...) {
        return false;
    }
    return false;
}

Verdict protocol_conformance() {
    Verdict v;
    using testsupport::StubMode;
    using testsupport::StubServer;
    const auto pairs = conformance_pairs(29);
    v.expect(pairs.size() == 29, "not enough conformance pairs");
    const auto expected = classify_batch(pairs, LexicalBaseline());
    std::size_t checks = 0;
    auto check = [&](bool ok, const std::string& what) {
        ++checks;
        v.expect(ok, what);
    };

    {
        StubServer s(StubMode::baseline);
        check(classify_batch(pairs, client(s, 4)) == expected, "sequential batches lose order or values");
        check(s.max_batch_seen() == 4, "batch size not respected");
        check(s.calls() == 8, "unexpected number of requests");
        check(classify_batch(pairs, client(s, 3, 4)) == expected, "concurrent batches lose order");
        const auto h = client(s, 4).health();
        check(h.status == "ok" && h.max_tokens == 500, "health response not parsed");
    }
    {
        StubServer s(StubMode::reversed);
        check(classify_batch(pairs, client(s, 7, 2)) == expected, "out-of-order response not matched by id");
    }
    {
        StubServer s(StubMode::echo);
        const auto r = classify_batch(pairs, client(s, 10));
        bool ok = r.size() == pairs.size();
        for (std::size_t i = 0; ok && i < r.size(); ++i) {
            ok = r[i].pair_id == pairs[i].pair_id && r[i].prob_label1 == 0.5 && r[i].prob_label0() == 0.5 &&
                 r[i].predicted_label == 1;
        }
        check(ok, "echo mode: label-0 probability or threshold derivation wrong");
    }
    for (const auto& x : expected) {
        if (x.prob_label0() + x.prob_label1 != 1.0 && std::abs(x.prob_label0() + x.prob_label1 - 1.0) > 1e-15) {
            check(false, "label probabilities do not sum to one");
        }
        if (x.predicted_label != (x.prob_label1 >= 0.5 ? 1 : 0)) check(false, "threshold not applied");
    }

    for (auto mode : {StubMode::malformed_json, StubMode::wrong_count, StubMode::unknown_id, StubMode::out_of_range,
                      StubMode::bad_request}) {
        StubServer s(mode);
        const auto c = client(s, 8);
        check(raises<ProtocolError>([&] { classify_batch(pairs, c); }, pairs.size()),
              "protocol violation not reported with the unscored ids");
        check(s.calls() == 4, "protocol error was retried");
    }
    {
        StubServer s(StubMode::server_error);
        const auto c = client(s, 10);
        check(raises<TransportError>([&] { classify_batch(pairs, c); }, pairs.size()),
              "HTTP 5xx not reported as transport failure");
        check(s.calls() == 6, "5xx not retried exactly once per batch");
    }
    {
        StubServer s(StubMode::flaky);
        check(classify_batch(pairs, client(s, 29)) == expected, "transient failure not absorbed by the retry");
    }
    {
        StubServer s(StubMode::slow);
        const auto c = client(s, 29, 1, std::chrono::milliseconds(200));
        check(raises<TransportError>([&] { classify_batch(pairs, c); }, pairs.size()), "timeout not reported");
    }
    {
        RemoteClassifier c({"http://127.0.0.1:" + std::to_string(testsupport::unused_port()), 8,
                            std::chrono::milliseconds(500), 1});
        check(raises<TransportError>([&] { classify_batch(pairs, c); }, pairs.size()), "refused connection not reported");
    }
    {
        StubServer s(StubMode::baseline);
        setenv(kEndpointEnv, s.url().c_str(), 1);
        const auto backend = parse_backend("remote");
        const auto cls = make_classifier(backend);
        unsetenv(kEndpointEnv);
        check(classify_batch(pairs, *cls) == expected, "endpoint from the environment not used");
    }
    v.detail = std::to_string(checks) + " checks against the local stub";
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Verdict (*run)();
        double budget_s;
    };
    const Criterion criteria[] = {
        {"slicer round-trip", slicer_round_trip, 5.0},
        {"pair balance and derangement", pair_balance, 5.0},
        {"count identities", count_identities, 0.0},
        {"scoring oracle equivalence", scoring_oracle, 0.0},
        {"density/noise property", density, 0.0},
        {"planted-relevance end-to-end", planted_pretest, 30.0},
        {"planted X-patent search", planted_x_search, 0.0},
        {"determinism", determinism, 0.0},
        {"protocol conformance", protocol_conformance, 0.0},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs >= c.budget_s) {
            v.failures.push_back("took " + text::format_double(secs) + " s, limit " + text::format_double(c.budget_s) +
                                 " s");
        }
        const bool ok = v.failures.empty();
        failed += !ok;
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", secs);
        std::cout << (ok ? "PASS" : "FAIL") << "  " << c.name << "  [" << timing << "]  " << v.detail << "\n";
        for (const auto& f : v.failures) std::cout << "      " << f << "\n";
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
