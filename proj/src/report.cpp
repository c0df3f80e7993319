#include "offdiag/report.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace offdiag::report {

json rank_json(const RankResult& r) {
  json j;
  j["rank"] = r.rank;
  j["sigma_max"] = r.sigma_max;
  if (std::isinf(r.gap_ratio))
    j["gap_ratio"] = "inf";
  else
    j["gap_ratio"] = r.gap_ratio;
  j["ambiguous"] = r.ambiguous;
  return j;
}

json make_report(const std::string& claim, json inputs, json ranks, json residuals,
                 const std::string& verdict) {
  json j;
  j["schema"] = "offdiag-report-v1";
  j["claim"] = claim;
  j["inputs"] = std::move(inputs);
  j["ranks"] = std::move(ranks);
  j["residuals"] = std::move(residuals);
  j["verdict"] = verdict;
  return j;
}

json certificate_json(const construct::ConstructionCertificate& cert) {
  json inputs;
  inputs["n"] = cert.target.n;
  inputs["j"] = cert.target.j;
  inputs["k"] = cert.target.k;
  if (cert.gamma_spec) {
    inputs["m"] = cert.gamma_spec->m;
    inputs["gamma"] = cert.gamma_spec->gamma;
  }
  if (cert.search_evals > 0) {
    inputs["search_seed"] = cert.search_seed;
    inputs["search_evals"] = cert.search_evals;
  }
  json ranks;
  ranks["rank2"] = rank_json(cert.rank2);
  ranks["rank3"] = rank_json(cert.rank3);
  json residuals;
  residuals["normality_defect"] = cert.normality_defect;
  if (cert.s_pd_min_eig) residuals["s_pd_min_eig"] = *cert.s_pd_min_eig;
  if (cert.toeplitz_margin) residuals["toeplitz_margin"] = *cert.toeplitz_margin;
  return make_report("prescribed-corner-ranks", std::move(inputs), std::move(ranks),
                     std::move(residuals), to_string(cert.verdict));
}

json corner_report_json(const corners::CornerReport& rep, json inputs) {
  json ranks;
  ranks["rank2"] = rank_json(rep.rank2);
  ranks["rank3"] = rank_json(rep.rank3);
  json residuals;
  residuals["frob2"] = rep.frob2;
  residuals["frob3"] = rep.frob3;
  residuals["frobenius_gap"] = std::abs(rep.frob2 - rep.frob3);
  residuals["normality_defect"] = rep.normality_defect;
  residuals["commutator_residual"] = rep.commutator_residual;
  const bool certified = !rep.rank2.ambiguous && !rep.rank3.ambiguous;
  return make_report("frobenius-corner-identity", std::move(inputs), std::move(ranks),
                     std::move(residuals), certified ? "certified" : "ambiguous");
}

json cr_sample_json(const corners::CrSampleResult& res, json inputs,
                    const ToleranceProfile& tol) {
  json ranks = json::object();
  json residuals;
  residuals["trials_run"] = res.trials_run;
  residuals["ambiguous_skipped"] = res.ambiguous_skipped;
  std::string verdict = "certified"; // no violation found: evidence, not proof
  if (res.witness) {
    ranks["rank2"] = rank_json(res.witness->rank2);
    ranks["rank3"] = rank_json(res.witness->rank3);
    residuals["witness_trial"] = res.witness->trial;
    verdict = "violated";
  }
  json j = make_report("common-rank-sampling", std::move(inputs), std::move(ranks),
                       std::move(residuals), verdict);
  j["note"] = res.witness ? "unequal corner ranks witnessed"
                          : "no violation found in the sampled projections; evidence, not proof";
  j["gap_factor"] = tol.gap_factor;
  return j;
}

json chain_report_json(const chain::SubspaceChain& ch, const std::vector<double>& residuals,
                       json inputs) {
  json ranks;
  ranks["dims"] = ch.dims;
  ranks["lowest_index"] = ch.lowest_index;
  json res;
  res["forward_shift_residuals"] = residuals;
  return make_report("subspace-chain", std::move(inputs), std::move(ranks), std::move(res),
                     "certified");
}

json shift_model_json(const shift::ShiftModel& model, json inputs) {
  json ranks;
  ranks["rank2"] = rank_json(model.rank2);
  ranks["rank3"] = rank_json(model.rank3);
  ranks["rank2_grows_with_t"] = model.rank2_grows_with_t;
  json residuals;
  residuals["interior_normality_defect"] = model.interior_defect;
  residuals["full_normality_defect"] = model.full_defect;
  const bool certified = !model.rank2.ambiguous && !model.rank3.ambiguous;
  json j = make_report("truncated-corner-ranks", std::move(inputs), std::move(ranks),
                       std::move(residuals), certified ? "certified" : "ambiguous");
  j["label"] = model.label;
  return j;
}

void write_json_atomic(const std::string& path, json j, bool stable_output) {
  if (!stable_output) {
    const auto now = std::chrono::system_clock::now();
    j["timestamp"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  }
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::FormatError, "cannot write " + tmp.string());
    out << j.dump(2) << "\n";
    if (!out.flush()) fail(ErrorKind::FormatError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorKind::FormatError, "rename to " + path + " failed: " + ec.message());
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AmbiguousRank:
    case ErrorKind::AmbiguousChain:
    case ErrorKind::SearchExhausted:
    case ErrorKind::NotCyclicWitness:
    case ErrorKind::NumericalFailure:
      return 3;
    case ErrorKind::FormatError:
      return 4;
    default:
      return 2;
  }
}

int exit_code_for_verdict(const std::string& verdict) {
  if (verdict == "certified") return 0;
  if (verdict == "ambiguous") return 3;
  return 2;
}

} // namespace offdiag::report
