#pragma once

#include "oupairs/backtester.hpp"
#include "oupairs/cli_report.hpp"
#include "oupairs/data_ingest.hpp"
#include "oupairs/date.hpp"
#include "oupairs/error.hpp"
#include "oupairs/ou_model.hpp"
#include "oupairs/pair_formation.hpp"
#include "oupairs/signal_engine.hpp"
#include "oupairs/sweep.hpp"
