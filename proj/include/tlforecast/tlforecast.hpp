#pragma once

// Umbrella header for the tlforecast library: next-day air-pollutant
// forecasting with stacked LSTM networks and pre-trained-network transfer
// between stations and pollutants.

#include "tlforecast/dataset.hpp"
#include "tlforecast/errors.hpp"
#include "tlforecast/experiment.hpp"
#include "tlforecast/lstm.hpp"
#include "tlforecast/numkernel.hpp"
#include "tlforecast/training.hpp"
#include "tlforecast/transfer.hpp"
