#pragma once

#include <string>

#include "json.hpp"

#include "offdiag/chain.hpp"
#include "offdiag/construct.hpp"
#include "offdiag/corners.hpp"
#include "offdiag/shift_lab.hpp"

namespace offdiag::report {

using nlohmann::json;

/// gap_ratio serializes as a number, or the string "inf" when no singular
/// value falls below the rank threshold.
json rank_json(const RankResult& r);

/// Stable schema: {schema, claim, inputs{}, ranks{}, residuals{}, verdict}.
json make_report(const std::string& claim, json inputs, json ranks, json residuals,
                 const std::string& verdict);

json certificate_json(const construct::ConstructionCertificate& cert);
json corner_report_json(const corners::CornerReport& rep, json inputs);
json cr_sample_json(const corners::CrSampleResult& res, json inputs,
                    const ToleranceProfile& tol);
json chain_report_json(const chain::SubspaceChain& chain, const std::vector<double>& residuals,
                       json inputs);
json shift_model_json(const shift::ShiftModel& model, json inputs);

/// Adds a timestamp field unless stable_output; writes via temp + rename.
void write_json_atomic(const std::string& path, json j, bool stable_output);

/// Exit-code contract: 0 certified, 2 invalid target / violated claim,
/// 3 ambiguous numerics, 4 I/O or format trouble.
int exit_code_for(ErrorKind kind);
int exit_code_for_verdict(const std::string& verdict);

} // namespace offdiag::report
