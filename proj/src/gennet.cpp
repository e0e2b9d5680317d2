#include "pearl/gennet.hpp"

#include <cmath>
#include <string>

#include "pearl/error.hpp"

namespace pearl {

namespace {

void check_finite(const Matrix& m, const char* stage, std::size_t layer) {
    if (!m.all_finite())
        fail(ErrorKind::numeric_failure,
             std::string("non-finite activations after ") + stage + " layer " + std::to_string(layer));
}

}  // namespace

GeneratorNet init_generator(const Schema& schema, std::size_t latent_dim,
                            std::span<const std::size_t> hidden_dims, std::size_t label_count,
                            Rng& rng) {
    schema.validate();
    require(latent_dim >= 1, ErrorKind::invalid_parameter, "init_generator: latent_dim must be >= 1");
    require(!hidden_dims.empty(), ErrorKind::invalid_parameter,
            "init_generator: at least one hidden layer");
    require(label_count == 0 || label_count == schema.label_count(), ErrorKind::invalid_parameter,
            "init_generator: label_count does not match schema");

    GeneratorNet net;
    net.latent_dim = latent_dim;
    net.label_count = label_count;
    net.schema = schema;

    Rng init_rng = rng.fork("init");
    std::size_t fan_in = net.input_width();
    for (std::size_t h = 0; h <= hidden_dims.size(); ++h) {
        const std::size_t fan_out = h < hidden_dims.size() ? hidden_dims[h] : net.head_width();
        require(fan_out >= 1, ErrorKind::invalid_parameter, "init_generator: zero-width layer");
        LinearLayer fc;
        fc.W = gaussian_sample(init_rng, fan_in, fan_out, 0.0,
                               std::sqrt(2.0 / static_cast<double>(fan_in)));
        fc.b = Matrix(1, fan_out);
        net.fcs.push_back(std::move(fc));
        if (h < hidden_dims.size()) {
            BatchNormLayer bn;
            bn.gamma = Matrix(1, fan_out, 1.0);
            bn.beta = Matrix(1, fan_out, 0.0);
            bn.running_mean = Matrix(1, fan_out, 0.0);
            bn.running_var = Matrix(1, fan_out, 1.0);
            net.bns.push_back(std::move(bn));
        }
        fan_in = fan_out;
    }
    return net;
}

LatentBatch sample_latent(std::size_t batch, std::size_t latent_dim, std::size_t label_count,
                          const std::vector<double>* label_probs, Rng& rng) {
    require(batch >= 1, ErrorKind::invalid_parameter, "sample_latent: batch must be >= 1");
    LatentBatch lb;
    lb.z = gaussian_sample(rng, batch, latent_dim, 0.0, 1.0);
    if (label_count > 0) {
        lb.labels.resize(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const double u = rng.next_double();
            if (label_probs) {
                require(label_probs->size() == label_count, ErrorKind::invalid_parameter,
                        "label_probs length does not match label count");
                double acc = 0.0;
                std::size_t pick = label_count - 1;
                for (std::size_t c = 0; c < label_count; ++c) {
                    acc += (*label_probs)[c];
                    if (u < acc) {
                        pick = c;
                        break;
                    }
                }
                lb.labels[i] = pick;
            } else {
                lb.labels[i] = std::min(static_cast<std::size_t>(u * label_count), label_count - 1);
            }
        }
    }
    return lb;
}

Matrix forward(GeneratorNet& net, const LatentBatch& batch) {
    const std::size_t B = batch.z.rows();
    require(B >= 1 && batch.z.cols() == net.latent_dim, ErrorKind::invalid_parameter,
            "forward: latent batch shape mismatch");
    require(net.label_count == 0 || batch.labels.size() == B, ErrorKind::invalid_parameter,
            "forward: conditional net needs one label per row");

    Matrix x(B, net.input_width());
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t c = 0; c < net.latent_dim; ++c) x(r, c) = batch.z(r, c);
        if (net.label_count > 0) {
            require(batch.labels[r] < net.label_count, ErrorKind::invalid_parameter,
                    "forward: label index out of range");
            x(r, net.latent_dim + batch.labels[r]) = 1.0;
        }
    }

    GeneratorNet::Cache cache;
    const bool train = net.train_mode;
    if (train) {
        cache.input = x;
        cache.fc_in.push_back(x);
    }

    const std::size_t hidden = net.bns.size();
    for (std::size_t l = 0; l < hidden; ++l) {
        Matrix lin = matmul(x, net.fcs[l].W);
        add_row_inplace(lin, net.fcs[l].b);
        check_finite(lin, "fc", l);

        BatchNormLayer& bn = net.bns[l];
        const std::size_t F = lin.cols();
        Matrix xhat(B, F);
        Matrix inv_std(1, F);
        if (train) {
            for (std::size_t c = 0; c < F; ++c) {
                double mean = 0.0;
                for (std::size_t r = 0; r < B; ++r) mean += lin(r, c);
                mean /= static_cast<double>(B);
                double var = 0.0;
                for (std::size_t r = 0; r < B; ++r) {
                    const double d = lin(r, c) - mean;
                    var += d * d;
                }
                var /= static_cast<double>(B);
                const double is = 1.0 / std::sqrt(var + net.bn_eps);
                inv_std(0, c) = is;
                for (std::size_t r = 0; r < B; ++r) xhat(r, c) = (lin(r, c) - mean) * is;
                bn.running_mean(0, c) = net.bn_momentum * bn.running_mean(0, c) +
                                        (1.0 - net.bn_momentum) * mean;
                bn.running_var(0, c) = net.bn_momentum * bn.running_var(0, c) +
                                       (1.0 - net.bn_momentum) * var;
            }
        } else {
            for (std::size_t c = 0; c < F; ++c) {
                const double is = 1.0 / std::sqrt(bn.running_var(0, c) + net.bn_eps);
                inv_std(0, c) = is;
                const double mean = bn.running_mean(0, c);
                for (std::size_t r = 0; r < B; ++r) xhat(r, c) = (lin(r, c) - mean) * is;
            }
        }
        Matrix act(B, F);
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < F; ++c) {
                const double y = bn.gamma(0, c) * xhat(r, c) + bn.beta(0, c);
                act(r, c) = y > 0.0 ? y : 0.0;
            }
        check_finite(act, "bn-relu", l);
        if (train) {
            cache.xhat.push_back(std::move(xhat));
            cache.inv_std.push_back(std::move(inv_std));
            cache.fc_in.push_back(act);
        }
        x = std::move(act);
    }

    Matrix u = matmul(x, net.fcs[hidden].W);
    add_row_inplace(u, net.fcs[hidden].b);
    check_finite(u, "fc", hidden);

    // Heads: per-column activation onto the encoded layout, label block last.
    Matrix out(B, net.schema.encoded_width());
    const Schema& schema = net.schema;
    const std::size_t label_col = schema.has_label() ? schema.label_index() : schema.columns.size();
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        if (c == label_col) continue;
        const Column& col = schema.columns[c];
        const std::size_t off = schema.column_offset(c);
        if (col.kind == ColumnKind::continuous) {
            for (std::size_t r = 0; r < B; ++r)
                out(r, off) = 0.5 * (std::tanh(u(r, off)) + 1.0);
        } else {
            const std::size_t w = col.categories.size();
            for (std::size_t r = 0; r < B; ++r) {
                double mx = u(r, off);
                for (std::size_t j = 1; j < w; ++j) mx = std::max(mx, u(r, off + j));
                double sum = 0.0;
                for (std::size_t j = 0; j < w; ++j) {
                    const double e = std::exp(u(r, off + j) - mx);
                    out(r, off + j) = e;
                    sum += e;
                }
                for (std::size_t j = 0; j < w; ++j) out(r, off + j) /= sum;
            }
        }
    }
    if (net.label_count > 0) {
        const std::size_t off = schema.label_offset();
        for (std::size_t r = 0; r < B; ++r) out(r, off + batch.labels[r]) = 1.0;
    }
    check_finite(out, "head", hidden);

    if (train) {
        cache.output = out;
        cache.valid = true;
        net.cache = std::move(cache);
    } else {
        net.cache.valid = false;
    }
    return out;
}

ParamGrads backward(GeneratorNet& net, const Matrix& upstream_grad) {
    require(net.cache.valid, ErrorKind::invalid_state,
            "backward: no cached train-mode forward pass");
    const Matrix& out = net.cache.output;
    require(upstream_grad.same_shape(out), ErrorKind::invalid_parameter,
            "backward: upstream gradient shape mismatch");
    const std::size_t B = out.rows();
    const std::size_t hidden = net.bns.size();
    const Schema& schema = net.schema;

    // Head backward onto the raw linear output (label block drops out: it is
    // an input, not a function of the parameters).
    Matrix du(B, net.head_width());
    const std::size_t label_col = schema.has_label() ? schema.label_index() : schema.columns.size();
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        if (c == label_col) continue;
        const Column& col = schema.columns[c];
        const std::size_t off = schema.column_offset(c);
        if (col.kind == ColumnKind::continuous) {
            for (std::size_t r = 0; r < B; ++r) {
                const double t = 2.0 * out(r, off) - 1.0;  // tanh(u)
                du(r, off) = upstream_grad(r, off) * 0.5 * (1.0 - t * t);
            }
        } else {
            const std::size_t w = col.categories.size();
            for (std::size_t r = 0; r < B; ++r) {
                double dot = 0.0;
                for (std::size_t j = 0; j < w; ++j)
                    dot += upstream_grad(r, off + j) * out(r, off + j);
                for (std::size_t j = 0; j < w; ++j)
                    du(r, off + j) = out(r, off + j) * (upstream_grad(r, off + j) - dot);
            }
        }
    }

    ParamGrads pg;
    pg.grads.resize(4 * hidden + 2);

    // Output fc.
    pg.grads[4 * hidden] = matmul_tn(net.cache.fc_in[hidden], du);  // dW
    pg.grads[4 * hidden + 1] = col_sum(du);                          // db
    Matrix dx = matmul_nt(du, net.fcs[hidden].W);

    for (std::size_t li = hidden; li-- > 0;) {
        // ReLU.
        const Matrix& fed = net.cache.fc_in[li + 1];  // post-relu activations
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (fed.data()[i] <= 0.0) dx.data()[i] = 0.0;

        // BatchNorm: dx = inv_std/B * (B*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat)).
        const Matrix& xhat = net.cache.xhat[li];
        const Matrix& inv_std = net.cache.inv_std[li];
        const BatchNormLayer& bn = net.bns[li];
        const std::size_t F = xhat.cols();
        Matrix dgamma(1, F), dbeta(1, F);
        for (std::size_t c = 0; c < F; ++c) {
            double sg = 0.0, sb = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                sg += dx(r, c) * xhat(r, c);
                sb += dx(r, c);
            }
            dgamma(0, c) = sg;
            dbeta(0, c) = sb;
        }
        Matrix dlin(B, F);
        for (std::size_t c = 0; c < F; ++c) {
            const double g = bn.gamma(0, c);
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t r = 0; r < B; ++r) {
                const double dxh = dx(r, c) * g;
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * xhat(r, c);
            }
            const double scale = inv_std(0, c) / static_cast<double>(B);
            for (std::size_t r = 0; r < B; ++r) {
                const double dxh = dx(r, c) * g;
                dlin(r, c) = scale * (static_cast<double>(B) * dxh - sum_dxhat -
                                      xhat(r, c) * sum_dxhat_xhat);
            }
        }
        pg.grads[4 * li + 2] = std::move(dgamma);
        pg.grads[4 * li + 3] = std::move(dbeta);

        // Linear.
        pg.grads[4 * li] = matmul_tn(net.cache.fc_in[li], dlin);
        pg.grads[4 * li + 1] = col_sum(dlin);
        if (li > 0) dx = matmul_nt(dlin, net.fcs[li].W);
    }
    return pg;
}

std::vector<Matrix*> trainable_params(GeneratorNet& net) {
    std::vector<Matrix*> params;
    const std::size_t hidden = net.bns.size();
    for (std::size_t l = 0; l < hidden; ++l) {
        params.push_back(&net.fcs[l].W);
        params.push_back(&net.fcs[l].b);
        params.push_back(&net.bns[l].gamma);
        params.push_back(&net.bns[l].beta);
    }
    params.push_back(&net.fcs[hidden].W);
    params.push_back(&net.fcs[hidden].b);
    return params;
}

DecodedRecord decode(std::span<const double> net_output_row, const Schema& schema) {
    require(net_output_row.size() == schema.encoded_width(), ErrorKind::invalid_parameter,
            "decode: row width does not match schema");
    DecodedRecord rec(schema.columns.size());
    const std::size_t label_col = schema.has_label() ? schema.label_index() : schema.columns.size();
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const Column& col = schema.columns[c];
        const std::size_t off = (c == label_col) ? schema.label_offset() : schema.column_offset(c);
        if (col.kind == ColumnKind::continuous) {
            rec[c] = format_double(col.lo + net_output_row[off] * (col.hi - col.lo));
        } else {
            std::size_t best = 0;
            for (std::size_t j = 1; j < col.categories.size(); ++j)
                if (net_output_row[off + j] > net_output_row[off + best]) best = j;
            rec[c] = col.categories[best];
        }
    }
    return rec;
}

}  // namespace pearl
