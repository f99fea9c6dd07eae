#include "orbf/checkpoint.hpp"

#include "orbf/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace orbf {

namespace {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& key(std::string_view k) {
        if (!first_) out_ << '\n';
        first_ = false;
        out_ << k;
        return *this;
    }
    Writer& num(double v) {
        char buf[32];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out_ << ' ';
        out_.write(buf, p - buf);
        return *this;
    }
    Writer& integer(long long v) {
        out_ << ' ' << v;
        return *this;
    }
    // Length-prefixed so names may contain spaces.
    Writer& str(std::string_view s) {
        out_ << ' ' << s.size() << ':' << s;
        return *this;
    }
    Writer& vec(const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) num(v(i));
        return *this;
    }
    Writer& mat(const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) num(m(r, c));
        return *this;
    }
    void finish() { out_ << '\n'; }

private:
    std::ostream& out_;
    bool first_ = true;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string token() {
        std::string t;
        if (!(in_ >> t)) throw InputFormatError("checkpoint: unexpected end of input");
        return t;
    }
    void expect(std::string_view k) {
        auto t = token();
        if (t != k) throw InputFormatError("checkpoint: expected '" + std::string(k) + "', found '" + t + "'");
    }
    double num() {
        auto t = token();
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size())
            throw InputFormatError("checkpoint: bad number '" + t + "'");
        return v;
    }
    long long integer() {
        auto t = token();
        long long v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size())
            throw InputFormatError("checkpoint: bad integer '" + t + "'");
        return v;
    }
    std::size_t count() {
        auto v = integer();
        if (v < 0 || v > (1LL << 32)) throw InputFormatError("checkpoint: bad count");
        return static_cast<std::size_t>(v);
    }
    std::string str() {
        in_ >> std::ws;
        std::size_t n = 0;
        if (!(in_ >> n) || in_.get() != ':') throw InputFormatError("checkpoint: bad string");
        std::string s(n, '\0');
        if (n > 0 && !in_.read(s.data(), static_cast<std::streamsize>(n)))
            throw InputFormatError("checkpoint: truncated string");
        return s;
    }
    Eigen::VectorXd vec(std::size_t n) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = num();
        return v;
    }
    Eigen::MatrixXd mat(std::size_t r, std::size_t c) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = num();
        return m;
    }
    void header(std::string_view kind) {
        expect(kind);
        const auto v = integer();
        if (v != kCheckpointVersion)
            throw InputFormatError("checkpoint: unsupported " + std::string(kind) + " version " + std::to_string(v));
    }

private:
    std::istream& in_;
};

void write_prototypes(Writer& w, const PrototypeSet& set) {
    const auto d = set.dim();
    w.key("prototypes").integer(static_cast<long long>(set.k())).integer(static_cast<long long>(d))
        .num(set.decay).num(set.shrinkage.lambda).num(set.shrinkage.floor);
    for (const auto& p : set.prototypes) {
        w.key("unit").num(p.weight);
        w.key("mean").vec(p.mean);
        w.key("scatter").mat(p.scatter);
        w.key("covariance").mat(p.covariance);
    }
}

PrototypeSet read_prototypes(Reader& r) {
    r.expect("prototypes");
    const auto k = r.count();
    const auto d = r.count();
    PrototypeSet set;
    set.decay = r.num();
    set.shrinkage.lambda = r.num();
    set.shrinkage.floor = r.num();
    for (std::size_t j = 0; j < k; ++j) {
        Prototype p;
        r.expect("unit");
        p.weight = r.num();
        r.expect("mean");
        p.mean = r.vec(d);
        r.expect("scatter");
        p.scatter = r.mat(d, d);
        r.expect("covariance");
        p.covariance = r.mat(d, d);
        p.refactor(set.shrinkage.floor);
        set.prototypes.push_back(std::move(p));
    }
    return set;
}

void write_ewrls(Writer& w, const EwrlsState& s) {
    w.key("ewrls").integer(static_cast<long long>(s.dim())).num(s.tau()).num(s.delta())
        .integer(static_cast<long long>(s.n_updates()));
    w.key("theta").vec(s.theta());
    w.key("inv_gram").mat(s.inv_gram());
}

EwrlsState read_ewrls(Reader& r) {
    r.expect("ewrls");
    const auto dim = r.count();
    const double tau = r.num();
    const double delta = r.num();
    const auto n = r.count();
    r.expect("theta");
    auto theta = r.vec(dim);
    r.expect("inv_gram");
    auto P = r.mat(dim, dim);
    return EwrlsState::restore(std::move(theta), std::move(P), tau, delta, n);
}

} // namespace

void save_prototypes(std::ostream& out, const PrototypeSet& set) {
    Writer w(out);
    w.key("orbf-prototypes").integer(kCheckpointVersion);
    write_prototypes(w, set);
    w.finish();
}

PrototypeSet load_prototypes(std::istream& in) {
    Reader r(in);
    r.header("orbf-prototypes");
    return read_prototypes(r);
}

void save_ewrls(std::ostream& out, const EwrlsState& state) {
    Writer w(out);
    w.key("orbf-ewrls").integer(kCheckpointVersion);
    write_ewrls(w, state);
    w.finish();
}

EwrlsState load_ewrls(std::istream& in) {
    Reader r(in);
    r.header("orbf-ewrls");
    return read_ewrls(r);
}

void save_checkpoint(std::ostream& out, const RbfNetModel& m) {
    Writer w(out);
    const auto& c = m.config();
    w.key("orbf-checkpoint").integer(kCheckpointVersion);
    w.key("model").str(RbfNetModel::kModelId);
    w.key("target").str(m.target_id());
    w.key("horizon").integer(static_cast<long long>(m.horizon()));
    w.key("config")
        .integer(static_cast<long long>(c.hidden_units))
        .integer(static_cast<long long>(c.seed))
        .integer(c.kmeans_max_iter)
        .num(c.kmeans_tol)
        .num(c.shrinkage.lambda)
        .num(c.shrinkage.floor)
        .num(c.prototype_decay)
        .num(c.tau)
        .num(c.delta)
        .integer(c.online)
        .integer(c.update_prototypes)
        .integer(static_cast<long long>(c.selection.max_features))
        .num(c.selection.min_r2_gain)
        .num(c.selection.vif_threshold);

    const auto& sel = m.selection();
    w.key("selection").str(sel.target_id).integer(static_cast<long long>(sel.size()));
    w.key("features");
    for (auto f : sel.features) w.integer(static_cast<long long>(f));
    w.key("names").integer(static_cast<long long>(sel.feature_names.size()));
    for (const auto& n : sel.feature_names) w.str(n);
    w.key("r2_path").integer(static_cast<long long>(sel.r2_path.size()));
    for (double v : sel.r2_path) w.num(v);
    w.key("vifs").integer(static_cast<long long>(sel.vifs.size()));
    for (double v : sel.vifs) w.num(v);

    w.key("standardizer").integer(m.standardizer().dim()).vec(m.standardizer().mean).vec(m.standardizer().scale);
    write_prototypes(w, m.prototypes());
    write_ewrls(w, m.head());

    w.key("pending").integer(static_cast<long long>(m.pending().size())).integer(m.last_t());
    for (const auto& p : m.pending()) {
        w.key("entry").integer(p.t).num(p.y_hat).integer(p.x.size()).vec(p.x).integer(p.phi.size()).vec(p.phi);
    }
    w.key("end");
    w.finish();
}

RbfNetModel load_checkpoint(std::istream& in) {
    Reader r(in);
    r.header("orbf-checkpoint");
    RbfNetModel::Parts parts;
    r.expect("model");
    if (auto kind = r.str(); kind != RbfNetModel::kModelId)
        throw InputFormatError("checkpoint: unsupported model kind '" + kind + "'");
    r.expect("target");
    parts.target_id = r.str();
    r.expect("horizon");
    parts.horizon = r.count();

    auto& c = parts.config;
    r.expect("config");
    c.hidden_units = r.count();
    c.seed = static_cast<std::uint64_t>(r.integer());
    c.kmeans_max_iter = static_cast<int>(r.integer());
    c.kmeans_tol = r.num();
    c.shrinkage.lambda = r.num();
    c.shrinkage.floor = r.num();
    c.prototype_decay = r.num();
    c.tau = r.num();
    c.delta = r.num();
    c.online = r.integer() != 0;
    c.update_prototypes = r.integer() != 0;
    c.selection.max_features = r.count();
    c.selection.min_r2_gain = r.num();
    c.selection.vif_threshold = r.num();

    auto& sel = parts.selection;
    r.expect("selection");
    sel.target_id = r.str();
    const auto nf = r.count();
    r.expect("features");
    for (std::size_t i = 0; i < nf; ++i) sel.features.push_back(r.count());
    r.expect("names");
    for (auto n = r.count(); n > 0; --n) sel.feature_names.push_back(r.str());
    r.expect("r2_path");
    for (auto n = r.count(); n > 0; --n) sel.r2_path.push_back(r.num());
    r.expect("vifs");
    for (auto n = r.count(); n > 0; --n) sel.vifs.push_back(r.num());

    r.expect("standardizer");
    const auto sd = r.count();
    parts.standardizer.mean = r.vec(sd);
    parts.standardizer.scale = r.vec(sd);
    parts.prototypes = read_prototypes(r);
    parts.head = read_ewrls(r);

    r.expect("pending");
    const auto np = r.count();
    parts.last_t = r.integer();
    for (std::size_t i = 0; i < np; ++i) {
        PendingPrediction p;
        r.expect("entry");
        p.t = r.integer();
        p.y_hat = r.num();
        p.x = r.vec(r.count());
        p.phi = r.vec(r.count());
        parts.pending.push_back(std::move(p));
    }
    r.expect("end");
    return RbfNetModel::from_parts(std::move(parts));
}

void save_checkpoint(const std::filesystem::path& path, const RbfNetModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    save_checkpoint(out, model);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RbfNetModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    return load_checkpoint(in);
}

} // namespace orbf
