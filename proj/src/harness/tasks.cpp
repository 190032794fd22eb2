// Copyright 2026-present the mhc-workbench project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mhc/harness/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mhc/random.hpp"

namespace mhc::harness {

namespace {

constexpr std::uint64_t kTeacherStream = 2000;
constexpr std::uint64_t kDataStream = 3000;
constexpr std::uint64_t kHeadStream = 4000;

std::vector<StreamState>
expand_rows(const Matrix& rows, std::size_t n) {
    std::vector<StreamState> out;
    out.reserve(rows.rows());
    for (std::size_t t = 0; t < rows.rows(); ++t) {
        out.push_back(expand(Matrix(1, rows.cols(), std::vector<double>(rows.row_span(t).begin(),
                                                                          rows.row_span(t).end())),
                             n));
    }
    return out;
}

ad::Var
reduce_streams(ad::Tape& tape, ad::Var out, std::size_t n) {
    const std::size_t tokens = tape.value(out).rows();
    const ad::Var mean_weights = tape.constant(Matrix(tokens, n, 1.0 / static_cast<double>(n)));
    return ad::stream_pre(tape, mean_weights, out, n);
}

/// Y = X W with a fixed Gaussian teacher W.
class SyntheticRegression final : public Task {
public:
    explicit SyntheticRegression(const ExperimentConfig& cfg) : cfg_(cfg) {
        Rng teacher = Rng::derived(cfg.seed, kTeacherStream);
        teacher_ = teacher.normal_matrix(cfg.width, cfg.width, 1.0 / std::sqrt(static_cast<double>(cfg.width)));
        for (std::size_t i = 0; i <= kBatchPool; ++i) {
            Rng data = Rng::derived(cfg.seed, kDataStream + i);
            Batch b;
            b.inputs = data.normal_matrix(cfg.batch_size, cfg.width, 1.0);
            b.targets = matmul(b.inputs, teacher_);
            pool_.push_back(std::move(b));
        }
    }

    Batch
    batch(std::size_t step) const override {
        return pool_[step % kBatchPool];
    }
    Batch
    held_out() const override {
        return pool_[kBatchPool];
    }
    ad::ParameterSet
    init_head() const override {
        return {};
    }
    std::vector<StreamState>
    input_states(const StackConfig& stack, const ad::ParameterSet&, const Batch& b) const override {
        return expand_rows(b.inputs, stack.n);
    }
    ad::Var
    record_loss(ad::Tape& tape, const StackConfig& stack, const ad::ParameterVars& vars,
                const Batch& b) const override {
        const ad::Var states = ad::stream_expand(tape, tape.constant(b.inputs), stack.n);
        const ad::Var out = ad::record_stack(tape, stack, vars, states);
        const ad::Var reduced = reduce_streams(tape, out, stack.n);
        return ad::mean_square(tape, ad::sub(tape, reduced, tape.constant(b.targets)));
    }

private:
    ExperimentConfig cfg_;
    Matrix teacher_;
    std::vector<Batch> pool_;
};

/// Next-character prediction over a small built-in corpus.
class CharSequence final : public Task {
public:
    explicit CharSequence(const ExperimentConfig& cfg) : cfg_(cfg) {
        const std::string& text = char_corpus();
        std::set<char> alphabet(text.begin(), text.end());
        vocab_.assign(alphabet.begin(), alphabet.end());
        ids_.reserve(text.size());
        for (char ch : text) {
            ids_.push_back(static_cast<std::size_t>(std::lower_bound(vocab_.begin(), vocab_.end(), ch) -
                                                    vocab_.begin()));
        }
        if (ids_.size() < (kBatchPool + 1) * (cfg.batch_size + 1)) {
            throw ValidationError("batch_size too large for the character corpus");
        }
        const std::size_t span = ids_.size() / (kBatchPool + 1);
        for (std::size_t i = 0; i <= kBatchPool; ++i) {
            Batch b;
            const std::size_t offset = i * span;
            for (std::size_t t = 0; t < cfg.batch_size; ++t) {
                b.input_ids.push_back(ids_[offset + t]);
                b.target_ids.push_back(ids_[offset + t + 1]);
            }
            pool_.push_back(std::move(b));
        }
    }

    Batch
    batch(std::size_t step) const override {
        return pool_[step % kBatchPool];
    }
    Batch
    held_out() const override {
        return pool_[kBatchPool];
    }
    ad::ParameterSet
    init_head() const override {
        Rng rng = Rng::derived(cfg_.seed, kHeadStream);
        ad::ParameterSet head;
        head[{-1, "embedding"}] = rng.normal_matrix(vocab_.size(), cfg_.width, 1.0);
        head[{-1, "readout"}] =
            rng.normal_matrix(cfg_.width, vocab_.size(), 1.0 / std::sqrt(static_cast<double>(cfg_.width)));
        return head;
    }
    std::vector<StreamState>
    input_states(const StackConfig& stack, const ad::ParameterSet& head, const Batch& b) const override {
        const Matrix& table = head.at({-1, "embedding"});
        Matrix rows(b.input_ids.size(), table.cols());
        for (std::size_t t = 0; t < b.input_ids.size(); ++t) {
            std::copy(table.row_span(b.input_ids[t]).begin(), table.row_span(b.input_ids[t]).end(),
                      rows.row_span(t).begin());
        }
        return expand_rows(rows, stack.n);
    }
    ad::Var
    record_loss(ad::Tape& tape, const StackConfig& stack, const ad::ParameterVars& vars,
                const Batch& b) const override {
        const ad::Var embedded = ad::embed(tape, vars.at({-1, "embedding"}), b.input_ids);
        const ad::Var states = ad::stream_expand(tape, embedded, stack.n);
        const ad::Var out = ad::record_stack(tape, stack, vars, states);
        const ad::Var logits = ad::matmul(tape, reduce_streams(tape, out, stack.n), vars.at({-1, "readout"}));
        return ad::cross_entropy(tape, logits, b.target_ids);
    }

private:
    ExperimentConfig cfg_;
    std::vector<char> vocab_;
    std::vector<std::size_t> ids_;
    std::vector<Batch> pool_;
};

}  // namespace

const std::string&
char_corpus() {
    static const std::string text =
        "the quick brown fox jumps over the lazy dog. "
        "a stream of residuals carries the signal from layer to layer. "
        "mix the streams, keep the mean, and the signal stays put. "
        "rows sum to one and columns sum to one, so the gain stays near one. "
        "deep stacks of small steps add up to a long walk through the network. "
        "the quick brown fox jumps over the lazy dog again and again.";
    return text;
}

std::unique_ptr<Task>
Task::create(const ExperimentConfig& cfg) {
    switch (cfg.task) {
        case TaskKind::SyntheticRegression:
            return std::make_unique<SyntheticRegression>(cfg);
        case TaskKind::CharSequence:
            return std::make_unique<CharSequence>(cfg);
    }
    throw ValidationError("unknown task");
}

}  // namespace mhc::harness
