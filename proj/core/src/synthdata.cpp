// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#include "predbranch/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json_io.hpp"
#include "predbranch/errors.hpp"
#include "predbranch/parallel.hpp"
#include "predbranch/random.hpp"
#include "predbranch/textio.hpp"

namespace predbranch {
namespace {

using detail::Json;

constexpr const char* kFormatVersion = "1";
// Probability mass z assigns outside the true class's latent cluster.
constexpr double kPriorLeak = 0.05;
// Class-mean offsets have this norm, so same-cluster means sit about 1 apart.
const double kWithinRadius = 1.0 / std::sqrt(2.0);

[[noreturn]] void invalid(const std::string& msg) { throw InvalidArgument("DatasetSpec: " + msg); }

Vec gaussian_vector(Rng& rng, std::size_t dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

void normalize(Vec& v) {
  const double n = std::sqrt(dot(v.span(), v.span()));
  for (double& x : v) x /= n;
}

/// Class means for one stream: K cluster centres on a centred regular
/// simplex with edge `center_distance`, plus a random offset of norm
/// kWithinRadius per class.
Mat draw_class_means(Rng& rng, const DatasetSpec& spec, const std::vector<int>& cluster) {
  const auto P = static_cast<std::size_t>(spec.feature_dim);
  const auto K = static_cast<std::size_t>(spec.n_latent_clusters);
  const double sep = spec.cluster_separation;
  const double center_distance = std::sqrt(std::max(sep * sep - 1.0, 0.0));

  std::vector<Vec> centers;
  while (centers.size() < K) {
    Vec v = gaussian_vector(rng, P);
    for (const Vec& q : centers) {
      const double proj = dot(v.span(), q.span());
      for (std::size_t i = 0; i < P; ++i) v[i] -= proj * q[i];
    }
    if (std::sqrt(dot(v.span(), v.span())) < 1e-6) continue;
    normalize(v);
    centers.push_back(std::move(v));
  }
  Vec centroid(P);
  for (auto& c : centers) {
    for (std::size_t i = 0; i < P; ++i) {
      c[i] *= center_distance / std::sqrt(2.0);
      centroid[i] += c[i] / static_cast<double>(K);
    }
  }
  for (auto& c : centers) {
    for (std::size_t i = 0; i < P; ++i) c[i] -= centroid[i];
  }

  Mat means(static_cast<std::size_t>(spec.num_classes), P);
  for (std::size_t c = 0; c < means.rows(); ++c) {
    Vec offset = gaussian_vector(rng, P);
    normalize(offset);
    const Vec& center = centers[static_cast<std::size_t>(cluster[c])];
    for (std::size_t i = 0; i < P; ++i) means(c, i) = center[i] + kWithinRadius * offset[i];
  }
  return means;
}

Vec cluster_log_prior(int num_classes, const std::vector<int>& cluster, int k) {
  const auto inside = static_cast<int>(std::count(cluster.begin(), cluster.end(), k));
  const int outside = num_classes - inside;
  const double leak = outside > 0 ? kPriorLeak : 0.0;
  Vec z(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    z[static_cast<std::size_t>(c)] =
        cluster[static_cast<std::size_t>(c)] == k ? std::log((1.0 - leak) / inside) : std::log(leak / outside);
  }
  return z;
}

int split_size(const DatasetSpec& spec, Split s) {
  switch (s) {
    case Split::kTrain: return spec.n_train;
    case Split::kVal: return spec.n_val;
    case Split::kTest: return spec.n_test;
  }
  return 0;
}

Json spec_json(const DatasetSpec& s) {
  Json j = Json::object();
  j["num_classes"] = s.num_classes;
  j["feature_dim"] = s.feature_dim;
  j["n_train"] = s.n_train;
  j["n_val"] = s.n_val;
  j["n_test"] = s.n_test;
  j["imbalance_exponent"] = s.imbalance_exponent;
  j["n_latent_clusters"] = s.n_latent_clusters;
  j["cluster_separation"] = s.cluster_separation;
  j["noise_scale"] = s.noise_scale;
  j["scene_size"] = s.scene_size;
  j["seed"] = s.seed;
  return j;
}

// Missing keys keep their defaults so hand-written spec files can be partial.
DatasetSpec spec_from(const Json& j, const std::string& block) {
  if (!j.is_object()) throw FormatError(block + ": expected an object");
  DatasetSpec s;
  auto get_int = [&](const char* key, int& out) {
    if (j.contains(key)) out = static_cast<int>(detail::int_member(j, key, block));
  };
  auto get_num = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::number_member(j, key, block);
  };
  get_int("num_classes", s.num_classes);
  get_int("feature_dim", s.feature_dim);
  get_int("n_train", s.n_train);
  get_int("n_val", s.n_val);
  get_int("n_test", s.n_test);
  get_num("imbalance_exponent", s.imbalance_exponent);
  get_int("n_latent_clusters", s.n_latent_clusters);
  get_num("cluster_separation", s.cluster_separation);
  get_num("noise_scale", s.noise_scale);
  get_int("scene_size", s.scene_size);
  if (j.contains("seed")) {
    const Json& v = j.at("seed");
    if (!v.is_number_unsigned()) {
      throw FormatError(block + ": field 'seed' must be a non-negative integer");
    }
    s.seed = v.get<std::uint64_t>();
  }
  return s;
}

void append_record(std::string& out, Split split, const RelationSample& r) {
  out += '[';
  out += Json(split_name(split)).dump();
  out += ',';
  out += std::to_string(r.scene_id);
  out += ',';
  out += std::to_string(r.g);
  for (const Vec* v : {&r.e, &r.u, &r.z}) {
    for (double x : *v) {
      out += ',';
      out += format_double(x);
    }
  }
  out += "]\n";
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

void DatasetSpec::validate() const {
  if (num_classes < 1) invalid("num_classes must be >= 1");
  if (feature_dim < 1) invalid("feature_dim must be >= 1");
  if (n_train < 0 || n_val < 0 || n_test < 0) invalid("split sizes must be >= 0");
  if (!(imbalance_exponent >= 0.0) || !std::isfinite(imbalance_exponent)) invalid("imbalance_exponent must be >= 0");
  if (n_latent_clusters < 1 || n_latent_clusters > num_classes) {
    invalid("n_latent_clusters must lie in [1, num_classes]");
  }
  if (n_latent_clusters > feature_dim) invalid("n_latent_clusters must not exceed feature_dim");
  if (!(cluster_separation > 0.0) || !std::isfinite(cluster_separation)) invalid("cluster_separation must be > 0");
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) invalid("noise_scale must be > 0");
  if (scene_size < 1) invalid("scene_size must be >= 1");
}

void Dataset::validate() const {
  spec.validate();
  const auto A = static_cast<std::size_t>(spec.num_classes);
  const auto P = static_cast<std::size_t>(spec.feature_dim);
  if (class_means_e.rows() != A || class_means_e.cols() != P || class_means_u.rows() != A ||
      class_means_u.cols() != P) {
    throw InvalidArgument("Dataset: class means have the wrong shape");
  }
  if (planted_cluster.size() != A) throw InvalidArgument("Dataset: planted_cluster has the wrong length");
  for (Split s : kAllSplits) {
    const auto& samples = split(s);
    std::vector<int> hist(A, 0);
    int scene = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& r = samples[i];
      const std::string where = std::string("Dataset ") + split_name(s) + " record " + std::to_string(i);
      if (r.e.size() != P || r.u.size() != P || r.z.size() != A) throw InvalidArgument(where + ": dimension mismatch");
      if (r.g < 0 || static_cast<std::size_t>(r.g) >= A) throw InvalidArgument(where + ": label out of range");
      if (!r.e.all_finite() || !r.u.all_finite() || !r.z.all_finite()) throw InvalidArgument(where + ": non-finite value");
      if (i == 0 ? r.scene_id != 0 : (r.scene_id != scene && r.scene_id != scene + 1)) {
        throw InvalidArgument(where + ": scene ids are not contiguous");
      }
      scene = r.scene_id;
      ++hist[static_cast<std::size_t>(r.g)];
    }
    if (counts(s) != hist) throw InvalidArgument(std::string("Dataset ") + split_name(s) + ": class_counts disagree with labels");
  }
}

std::vector<double> power_law_weights(int num_classes, double exponent) {
  std::vector<double> w(static_cast<std::size_t>(num_classes));
  double total = 0.0;
  for (std::size_t r = 0; r < w.size(); ++r) {
    w[r] = std::pow(static_cast<double>(r + 1), -exponent);
    total += w[r];
  }
  for (double& x : w) x /= total;
  return w;
}

double exponent_for_head_tail_ratio(int num_classes, double ratio) {
  if (num_classes < 2 || !(ratio >= 1.0)) throw InvalidArgument("head:tail ratio needs A >= 2 and ratio >= 1");
  return std::log(ratio) / std::log(static_cast<double>(num_classes));
}

std::vector<int> apportion(int total, const std::vector<double>& weights) {
  if (total < 0) throw InvalidArgument("apportion: negative total");
  if (weights.empty()) throw InvalidArgument("apportion: no weights");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0)) throw InvalidArgument("apportion: weights must have positive sum");
  std::vector<int> counts(weights.size());
  std::vector<double> remainder(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = total * weights[i] / sum;
    counts[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % order.size()]];
  return counts;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  const int A = spec.num_classes;
  const auto P = static_cast<std::size_t>(spec.feature_dim);

  Dataset ds;
  ds.spec = spec;

  // Shuffled round-robin keeps cluster sizes balanced while mixing head and
  // tail classes inside every cluster.
  std::vector<int> order(static_cast<std::size_t>(A));
  std::iota(order.begin(), order.end(), 0);
  Rng assign_rng(derive_seed(spec.seed, "cluster-assignment"));
  assign_rng.shuffle(std::span<int>(order));
  ds.planted_cluster.assign(static_cast<std::size_t>(A), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    ds.planted_cluster[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % spec.n_latent_clusters;
  }

  Rng means_e_rng(derive_seed(spec.seed, "class-means/e"));
  Rng means_u_rng(derive_seed(spec.seed, "class-means/u"));
  ds.class_means_e = draw_class_means(means_e_rng, spec, ds.planted_cluster);
  ds.class_means_u = draw_class_means(means_u_rng, spec, ds.planted_cluster);

  std::vector<Vec> priors;
  for (int k = 0; k < spec.n_latent_clusters; ++k) priors.push_back(cluster_log_prior(A, ds.planted_cluster, k));

  const std::vector<double> weights = power_law_weights(A, spec.imbalance_exponent);
  for (Split s : kAllSplits) {
    const std::vector<int> counts = apportion(split_size(spec, s), weights);
    ds.class_counts[static_cast<int>(s)] = counts;

    std::vector<std::vector<RelationSample>> per_class(static_cast<std::size_t>(A));
    parallel_for(static_cast<std::size_t>(A), [&](std::size_t c) {
      Rng rng(derive_seed(spec.seed, std::string("samples/") + split_name(s) + "/" + std::to_string(c)));
      auto& out = per_class[c];
      out.reserve(static_cast<std::size_t>(counts[c]));
      for (int n = 0; n < counts[c]; ++n) {
        RelationSample r;
        r.e = Vec(P);
        r.u = Vec(P);
        for (std::size_t i = 0; i < P; ++i) r.e[i] = ds.class_means_e(c, i) + spec.noise_scale * rng.normal();
        for (std::size_t i = 0; i < P; ++i) r.u[i] = ds.class_means_u(c, i) + spec.noise_scale * rng.normal();
        r.z = priors[static_cast<std::size_t>(ds.planted_cluster[c])];
        r.g = static_cast<int>(c);
        out.push_back(std::move(r));
      }
    });

    auto& samples = ds.split(s);
    for (auto& chunk : per_class) {
      for (auto& r : chunk) samples.push_back(std::move(r));
    }
    Rng order_rng(derive_seed(spec.seed, std::string("order/") + split_name(s)));
    order_rng.shuffle(std::span<RelationSample>(samples));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i].scene_id = static_cast<int>(i / static_cast<std::size_t>(spec.scene_size));
    }
  }
  return ds;
}

std::string serialize_dataset(const Dataset& ds) {
  ds.validate();
  Json header = Json::object();
  header["format_version"] = kFormatVersion;
  header["A"] = ds.spec.num_classes;
  header["P"] = ds.spec.feature_dim;
  header["scene_size"] = ds.spec.scene_size;
  header["spec"] = spec_json(ds.spec);
  Json counts = Json::object();
  for (Split s : kAllSplits) counts[split_name(s)] = ds.counts(s);
  header["counts"] = counts;
  header["planted_cluster"] = ds.planted_cluster;
  header["class_means_e"] = detail::mat_to_json(ds.class_means_e);
  header["class_means_u"] = detail::mat_to_json(ds.class_means_u);

  std::string out = detail::dump(header);
  out += '\n';
  for (Split s : kAllSplits) {
    for (const auto& r : ds.split(s)) append_record(out, s, r);
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_text_file(path, serialize_dataset(ds));
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset: empty file");
  const Json header = detail::parse(line, "dataset header");
  const std::string block = "dataset header";
  const std::string version = detail::string_member(header, "format_version", block);
  if (version != kFormatVersion) throw FormatError("dataset: unsupported format_version \"" + version + "\"");

  Dataset ds;
  ds.spec = spec_from(detail::member(header, "spec", block), "dataset header.spec");
  try {
    ds.spec.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("dataset header: ") + e.what());
  }
  const int A = ds.spec.num_classes;
  const int P = ds.spec.feature_dim;
  if (detail::int_member(header, "A", block) != A || detail::int_member(header, "P", block) != P ||
      detail::int_member(header, "scene_size", block) != ds.spec.scene_size) {
    throw FormatError("dataset header: A/P/scene_size disagree with the embedded spec");
  }
  const Json& counts = detail::member(header, "counts", block);
  for (Split s : kAllSplits) {
    ds.class_counts[static_cast<int>(s)] = detail::ints_from_json(detail::member(counts, split_name(s), "dataset header.counts"),
                                                                  std::string("dataset header.counts.") + split_name(s));
  }
  ds.planted_cluster = detail::ints_from_json(detail::member(header, "planted_cluster", block), "dataset header.planted_cluster");
  ds.class_means_e = detail::mat_from_json(detail::member(header, "class_means_e", block), "dataset header.class_means_e");
  ds.class_means_u = detail::mat_from_json(detail::member(header, "class_means_u", block), "dataset header.class_means_u");

  const std::size_t expected_len = 3 + 2 * static_cast<std::size_t>(P) + static_cast<std::size_t>(A);
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string where = "dataset record " + std::to_string(index);
    const Json rec = detail::parse(line, where);
    if (!rec.is_array()) throw FormatError(where + ": expected a JSON array");
    if (rec.size() != expected_len) {
      throw FormatError(where + ": expected " + std::to_string(expected_len) + " fields (P=" + std::to_string(P) +
                        ", A=" + std::to_string(A) + "), found " + std::to_string(rec.size()));
    }
    if (!rec[0].is_string()) throw FormatError(where + ": split tag must be a string");
    const std::string tag = rec[0].get<std::string>();
    Split split;
    if (tag == "train") split = Split::kTrain;
    else if (tag == "val") split = Split::kVal;
    else if (tag == "test") split = Split::kTest;
    else throw FormatError(where + ": unknown split tag \"" + tag + "\"");
    if (!rec[1].is_number_integer() || !rec[2].is_number_integer()) {
      throw FormatError(where + ": scene id and label must be integers");
    }
    RelationSample r;
    r.scene_id = rec[1].get<int>();
    r.g = rec[2].get<int>();
    r.e = Vec(static_cast<std::size_t>(P));
    r.u = Vec(static_cast<std::size_t>(P));
    r.z = Vec(static_cast<std::size_t>(A));
    std::size_t pos = 3;
    for (Vec* v : {&r.e, &r.u, &r.z}) {
      for (double& x : *v) {
        const Json& item = rec[pos++];
        if (!item.is_number()) throw FormatError(where + ": non-numeric feature value");
        x = item.get<double>();
      }
    }
    ds.split(split).push_back(std::move(r));
    ++index;
  }
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) { return parse_dataset(read_text_file(path)); }

std::string dataset_spec_to_json(const DatasetSpec& spec) { return detail::dump(spec_json(spec)); }

DatasetSpec dataset_spec_from_json(const std::string& text) {
  DatasetSpec s = spec_from(detail::parse(text, "dataset spec"), "dataset spec");
  s.validate();
  return s;
}

}  // namespace predbranch
