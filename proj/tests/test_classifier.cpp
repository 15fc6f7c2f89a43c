#include <catch_amalgamated.hpp>

#include <set>

#include "claimsearch/classifier.hpp"
#include "support/synthetic.hpp"

using namespace claimsearch;
using Catch::Approx;

namespace {

PairInput pair_of(std::string id, std::string claim, std::string piece) {
    PairInput p;
    p.pair_id = std::move(id);
    p.claim_text = std::move(claim);
    p.piece_text = std::move(piece);
    p.purpose = Purpose::search;
    return p;
}

// Independent coverage oracle: sorted unique vectors instead of hash sets.
double coverage_oracle(const std::string& claim, const std::string& piece) {
    auto norm = [](const std::string& s) {
        std::vector<std::string> out;
        for (auto w : testsupport::stream_words(s)) {
            std::size_t b = 0, e = w.size();
            while (b < e && std::ispunct(static_cast<unsigned char>(w[b]))) ++b;
            while (e > b && std::ispunct(static_cast<unsigned char>(w[e - 1]))) --e;
            std::string x = w.substr(b, e - b);
            for (auto& ch : x) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (!x.empty()) out.push_back(x);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    };
    const auto c = norm(claim), p = norm(piece);
    std::vector<std::string> both;
    std::set_intersection(c.begin(), c.end(), p.begin(), p.end(), std::back_inserter(both));
    return static_cast<double>(both.size()) / static_cast<double>(c.size());
}

}  // namespace

TEST_CASE("baseline probability", "[classifier]") {
    CHECK(baseline_probability("a rotor blade", "the rotor spins") == Approx(1.0 / 3.0));
    CHECK(baseline_probability("A rotor, blade.", "a ROTOR blade") == 1.0);
    CHECK(baseline_probability("a rotor blade", "") == 0.0);
    CHECK(baseline_probability("a b c d", "x a y b z") == 0.5);
    CHECK_THROWS_AS(baseline_probability("... ,", "x"), PreconditionError);
}

TEST_CASE("baseline matches a set-intersection oracle", "[classifier][property]") {
    Rng rng(5);
    const auto& vocab = testsupport::filler_words();
    for (int round = 0; round < 500; ++round) {
        auto words = [&](std::size_t n) {
            std::string s;
            for (std::size_t i = 0; i < n; ++i) {
                auto w = vocab[rng.uniform(0, 20)];
                if (rng.uniform(0, 3) == 0) w[0] = static_cast<char>(std::toupper(w[0]));
                if (rng.uniform(0, 4) == 0) w += ",";
                s += (i ? " " : "") + w;
            }
            return s;
        };
        const auto claim = words(rng.uniform(1, 12));
        const auto piece = words(rng.uniform(0, 30));
        REQUIRE(baseline_probability(claim, piece) == coverage_oracle(claim, piece));
    }
}

TEST_CASE("adding a claim word to the piece never lowers the baseline", "[classifier][property]") {
    Rng rng(6);
    for (int round = 0; round < 300; ++round) {
        const auto claim = testsupport::random_filler(rng, rng.uniform(1, 10));
        auto piece = testsupport::random_filler(rng, rng.uniform(0, 15));
        const auto claim_words = testsupport::stream_words(claim);
        double prev = baseline_probability(claim, piece);
        for (int k = 0; k < 5; ++k) {
            piece += " " + claim_words[rng.uniform(0, claim_words.size() - 1)];
            const double now = baseline_probability(claim, piece);
            REQUIRE(now >= prev);
            prev = now;
        }
    }
}

TEST_CASE("classify_batch with the baseline", "[classifier]") {
    const std::vector<PairInput> pairs = {
        pair_of("same", "a rotor blade", "a rotor blade"),
        pair_of("none", "a rotor blade", "the stator hums"),
        pair_of("half", "a b c d", "a x b y"),
    };
    const LexicalBaseline baseline;
    const auto r = classify_batch(pairs, baseline);
    REQUIRE(r.size() == 3);
    CHECK(r[0].pair_id == "same");
    CHECK(r[0].prob_label1 == 1.0);
    CHECK(r[0].predicted_label == 1);
    CHECK(r[1].prob_label1 == 0.0);
    CHECK(r[1].predicted_label == 0);
    CHECK(r[2].prob_label1 == 0.5);
    CHECK(r[2].predicted_label == 1);
    for (const auto& x : r) CHECK(x.prob_label0() + x.prob_label1 == 1.0);

    CHECK_THROWS_AS(classify_batch(std::vector<PairInput>{}, baseline), PreconditionError);
}

TEST_CASE("batching does not change results", "[classifier][property]") {
    Rng rng(8);
    std::vector<PairInput> pairs;
    for (int i = 0; i < 97; ++i) {
        pairs.push_back(pair_of("p" + std::to_string(i), testsupport::random_filler(rng, rng.uniform(1, 8)),
                                testsupport::random_filler(rng, rng.uniform(0, 40))));
    }
    const auto reference = classify_batch(pairs, LexicalBaseline(1));
    for (std::size_t bs : {2u, 7u, 32u, 97u, 500u}) CHECK(classify_batch(pairs, LexicalBaseline(bs)) == reference);
}

namespace {

// Scores pairs by a fixed rule, optionally failing one batch, with concurrency.
class ScriptedClassifier final : public Classifier {
public:
    ScriptedClassifier(std::size_t bs, std::size_t in_flight, std::string poison = {})
        : bs_(bs), in_flight_(in_flight), poison_(std::move(poison)) {}

    std::vector<double> score(std::span<const PairInput> batch) const override {
        std::vector<double> out;
        for (const auto& p : batch) {
            if (!poison_.empty() && p.pair_id == poison_) throw TransportError("scripted failure");
            out.push_back(static_cast<double>(std::hash<std::string>{}(p.pair_id) % 1001) / 1000.0);
        }
        return out;
    }
    std::size_t batch_size() const override { return bs_; }
    std::size_t max_in_flight() const override { return in_flight_; }
    std::string name() const override { return "scripted"; }

private:
    std::size_t bs_, in_flight_;
    std::string poison_;
};

}  // namespace

TEST_CASE("concurrent batches keep input order", "[classifier]") {
    std::vector<PairInput> pairs;
    for (int i = 0; i < 203; ++i) pairs.push_back(pair_of("q" + std::to_string(i), "c", "p"));
    const auto serial = classify_batch(pairs, ScriptedClassifier(203, 1));
    const auto parallel = classify_batch(pairs, ScriptedClassifier(5, 4));
    CHECK(parallel == serial);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(parallel[i].pair_id == pairs[i].pair_id);
        CHECK(parallel[i].predicted_label == decide_label(parallel[i].prob_label1));
    }
}

TEST_CASE("a failed batch fails the call and names its pairs", "[classifier]") {
    std::vector<PairInput> pairs;
    for (int i = 0; i < 20; ++i) pairs.push_back(pair_of("q" + std::to_string(i), "c", "p"));
    const ScriptedClassifier cls(5, 3, "q7");
    try {
        classify_batch(pairs, cls);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.failed_pair_ids() == std::vector<std::string>{"q5", "q6", "q7", "q8", "q9"});
    }
    const auto partial = classify_batch_partial(pairs, cls);
    CHECK_FALSE(partial.complete());
    CHECK(partial.results[4].has_value());
    CHECK_FALSE(partial.results[5].has_value());
    CHECK(partial.results[10].has_value());
}

TEST_CASE("threshold and result validation", "[classifier]") {
    CHECK(decide_label(0.5) == 1);
    CHECK(decide_label(0.4999999) == 0);
    CHECK(make_result("a", 0.75).prob_label0() == 0.25);
    CHECK_THROWS_AS(make_result("a", 1.5), ProtocolError);
    CHECK_THROWS_AS(make_result("a", -0.1), ProtocolError);
    CHECK_THROWS_AS(make_result("a", std::nan("")), ProtocolError);
}
