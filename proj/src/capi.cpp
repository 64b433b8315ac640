// C ABI wrapper over the study runner: opaque report handles, error codes,
// and a thread-local last-error string. No exception may cross the ABI.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde.h"

#include <exception>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>

#include "stpde/bessel.hpp"
#include "stpde/lab.hpp"

struct stpde_report {
  stpde::LabResult result;
};

namespace {

thread_local std::string t_last_error;

void set_error(const char* msg) { t_last_error = msg == nullptr ? "" : msg; }

}  // namespace

extern "C" {

const char* stpde_version(void) { return stpde::kVersionString; }

const char* stpde_commands(void) {
  static const std::string joined = [] {
    std::string s;
    for (const std::string& c : stpde::lab_commands()) {
      if (!s.empty()) s += ' ';
      s += c;
    }
    return s;
  }();
  return joined.c_str();
}

int stpde_run(const char* command, const char* config_text,
              stpde_report** out) {
  if (out != nullptr) *out = nullptr;
  if (command == nullptr) {
    set_error("stpde_run: command is NULL");
    return 2;
  }
  try {
    stpde::KVConfig cfg =
        stpde::KVConfig::parse(config_text == nullptr ? "" : config_text);
    stpde::LabResult res = stpde::run_lab(command, cfg);
    const int code = res.exit_code;
    if (code != 0) set_error(res.message.c_str());
    if (out != nullptr) *out = new stpde_report{std::move(res)};
    return code;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return 2;
  } catch (const std::bad_alloc&) {
    set_error("stpde_run: out of memory");
    return 1;
  } catch (const std::exception& e) {
    set_error(e.what());
    return 1;
  } catch (...) {
    set_error("stpde_run: unknown error");
    return 1;
  }
}

const char* stpde_report_json(const stpde_report* report) {
  return report == nullptr ? "" : report->result.json.c_str();
}

const char* stpde_report_csv(const stpde_report* report) {
  return report == nullptr ? "" : report->result.csv.c_str();
}

const char* stpde_report_status(const stpde_report* report) {
  return report == nullptr ? "" : report->result.status.c_str();
}

const char* stpde_report_message(const stpde_report* report) {
  return report == nullptr ? "" : report->result.message.c_str();
}

int stpde_report_exit_code(const stpde_report* report) {
  return report == nullptr ? 2 : report->result.exit_code;
}

void stpde_report_free(stpde_report* report) { delete report; }

int stpde_scaled_bessel_i(long n, double r, double* out) {
  if (out == nullptr || n < 0 || !(r >= 0.0)) {
    set_error("stpde_scaled_bessel_i: need n >= 0, r >= 0, out non-NULL");
    return 2;
  }
  try {
    const std::vector<double> row = stpde::scaled_bessel_i_row(n, r);
    *out = row[static_cast<std::size_t>(n)];
    return 0;
  } catch (const std::exception& e) {
    set_error(e.what());
    return 1;
  }
}

const char* stpde_last_error(void) { return t_last_error.c_str(); }

}  // extern "C"
