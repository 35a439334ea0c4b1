#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "metroflow/error.hpp"
#include "metroflow/models.hpp"
#include "metroflow/rng.hpp"

namespace metroflow::models {

Mlp::Mlp(std::size_t n_inputs, const MlpParams& params) : params_(params) {
    if (n_inputs == 0) throw InvalidArgument("models", "fit_mlp", "network needs at least one input");
    SplitMix64 rng(SplitMix64::derive(params.seed, 0));
    std::size_t in = n_inputs;
    auto add_layer = [&](std::size_t out) {
        Layer layer;
        layer.in = in;
        layer.out = out;
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        layer.weights.resize(in * out);
        for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
        layer.bias.assign(out, 0.0);
        layers_.push_back(std::move(layer));
        in = out;
    };
    for (const int width : params.hidden_layers) {
        if (width < 1) throw InvalidArgument("models", "fit_mlp", "hidden layer widths must be >= 1");
        add_layer(static_cast<std::size_t>(width));
    }
    add_layer(1);
}

double Mlp::predict_one(std::span<const double> x) const {
    std::vector<double> a(x.begin(), x.end()), z;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        z.assign(L.bias.begin(), L.bias.end());
        for (std::size_t o = 0; o < L.out; ++o) {
            const double* w = L.weights.data() + o * L.in;
            double acc = 0.0;
            for (std::size_t i = 0; i < L.in; ++i) acc += w[i] * a[i];
            z[o] += acc;
        }
        if (l + 1 < layers_.size()) {
            for (auto& v : z) v = std::max(v, 0.0);
        }
        a.swap(z);
    }
    return a[0];
}

std::vector<double> Mlp::predict(MatrixView X) const {
    if (X.cols != n_inputs()) {
        throw WidthMismatch("models", "predict",
                            "expected " + std::to_string(n_inputs()) + " columns, got " + std::to_string(X.cols));
    }
    std::vector<double> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) out[i] = predict_one(X.row(i));
    return out;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
    return n;
}

std::vector<double> Mlp::parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& L : layers_) {
        flat.insert(flat.end(), L.weights.begin(), L.weights.end());
        flat.insert(flat.end(), L.bias.begin(), L.bias.end());
    }
    return flat;
}

void Mlp::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw LengthMismatch("models", "Mlp", "parameter vector has wrong length");
    std::size_t k = 0;
    for (auto& L : layers_) {
        for (auto& w : L.weights) w = flat[k++];
        for (auto& b : L.bias) b = flat[k++];
    }
}

namespace {

// Adds d(sum of squared errors)/d(params) * scale over `rows` into `grad` (same
// layout as Mlp::parameters) and returns the sum of squared errors.
double accumulate(const Mlp& net, MatrixView X, std::span<const double> y, std::span<const std::size_t> rows,
                  double scale, std::vector<double>& grad) {
    const auto& layers = net.layers();
    const std::size_t n_layers = layers.size();
    std::vector<std::size_t> offset(n_layers);
    for (std::size_t l = 0, k = 0; l < n_layers; ++l) {
        offset[l] = k;
        k += layers[l].weights.size() + layers[l].bias.size();
    }
    std::vector<std::vector<double>> act(n_layers + 1), pre(n_layers);
    std::vector<double> delta, next_delta;
    double sse = 0.0;
    for (const auto r : rows) {
        const auto x = X.row(r);
        act[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto& L = layers[l];
            pre[l].assign(L.bias.begin(), L.bias.end());
            for (std::size_t o = 0; o < L.out; ++o) {
                const double* w = L.weights.data() + o * L.in;
                double acc = 0.0;
                for (std::size_t i = 0; i < L.in; ++i) acc += w[i] * act[l][i];
                pre[l][o] += acc;
            }
            act[l + 1] = pre[l];
            if (l + 1 < n_layers) {
                for (auto& v : act[l + 1]) v = std::max(v, 0.0);
            }
        }
        const double err = act[n_layers][0] - y[r];
        sse += err * err;
        delta.assign(1, 2.0 * err * scale);
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& L = layers[l];
            double* gw = grad.data() + offset[l];
            double* gb = gw + L.weights.size();
            for (std::size_t o = 0; o < L.out; ++o) {
                const double dv = delta[o];
                if (dv == 0.0) continue;
                double* row = gw + o * L.in;
                for (std::size_t i = 0; i < L.in; ++i) row[i] += dv * act[l][i];
                gb[o] += dv;
            }
            if (l == 0) break;
            next_delta.assign(L.in, 0.0);
            for (std::size_t o = 0; o < L.out; ++o) {
                const double dv = delta[o];
                if (dv == 0.0) continue;
                const double* w = L.weights.data() + o * L.in;
                for (std::size_t i = 0; i < L.in; ++i) next_delta[i] += w[i] * dv;
            }
            for (std::size_t i = 0; i < L.in; ++i) {
                if (pre[l - 1][i] <= 0.0) next_delta[i] = 0.0;
            }
            delta.swap(next_delta);
        }
    }
    return sse;
}

}  // namespace

double Mlp::loss_and_gradient(MatrixView X, std::span<const double> y, std::vector<double>& gradient) const {
    if (X.rows == 0) throw EmptyInput("models", "fit_mlp", "no rows");
    gradient.assign(parameter_count(), 0.0);
    std::vector<std::size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const double n = static_cast<double>(X.rows);
    return accumulate(*this, X, y, rows, 1.0 / n, gradient) / n;
}

double Mlp::loss(MatrixView X, std::span<const double> y) const {
    double sse = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double e = predict_one(X.row(i)) - y[i];
        sse += e * e;
    }
    return sse / static_cast<double>(X.rows);
}

Mlp fit_mlp(MatrixView X, std::span<const double> y, const MlpParams& params) {
    constexpr const char* op = "fit_mlp";
    if (X.rows == 0 || X.cols == 0) throw EmptyInput("models", op, "no training rows");
    if (y.size() != X.rows) throw LengthMismatch("models", op, "target length differs from row count");
    if (!(params.learning_rate >= 0.0) || params.epochs < 1 || params.batch_size < 1) {
        throw InvalidArgument("models", op, "learning_rate >= 0, epochs >= 1 and batch_size >= 1 required");
    }
    for (const double v : X.values) {
        if (!std::isfinite(v)) throw InvalidArgument("models", op, "non-finite input");
    }

    Mlp net(X.cols, params);
    SplitMix64 rng(SplitMix64::derive(params.seed, 1));
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(net.parameter_count());
    const auto batch = static_cast<std::size_t>(params.batch_size);

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[static_cast<std::size_t>(rng.below(i + 1))]);
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            const double sse = accumulate(net, X, y, rows, 1.0 / static_cast<double>(rows.size()), grad);
            if (!std::isfinite(sse)) {
                throw NonFiniteLoss("models", op, "loss diverged at epoch " + std::to_string(epoch));
            }
            std::size_t k = 0;
            for (auto& L : net.layers()) {
                for (auto& w : L.weights) w -= params.learning_rate * grad[k++];
                for (auto& b : L.bias) b -= params.learning_rate * grad[k++];
            }
        }
        const double epoch_loss = net.loss(X, y);
        if (!std::isfinite(epoch_loss)) {
            throw NonFiniteLoss("models", op, "loss diverged at epoch " + std::to_string(epoch));
        }
        net.loss_history().push_back(epoch_loss);
    }
    return net;
}

}  // namespace metroflow::models
