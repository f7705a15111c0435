#pragma once

#include <string>

#include "artifacts.hpp"
#include "config.hpp"
#include "qsol/quadrature.hpp"

namespace qsol::app {

QuadratureOptions quadrature_options(const RunConfig& config);

CommandResult run_catalog(const RunConfig& config);
CommandResult run_basis(const RunConfig& config);
CommandResult run_xi(const RunConfig& config);
CommandResult run_balance(const RunConfig& config);
CommandResult run_spectrum(const RunConfig& config);
/// Exact identities on the configured manifold and levels; exit_code 1 when
/// any check fails. Module errors become failed checks.
CommandResult run_verify(const RunConfig& config);

/// Dispatches on config.mode (everything except `report`).
CommandResult run_command(const RunConfig& config);

}  // namespace qsol::app
