#pragma once

#include "nvmri/dsp.hpp"
#include "nvmri/emitter_count.hpp"
#include "nvmri/error.hpp"
#include "nvmri/field_model.hpp"
#include "nvmri/least_squares.hpp"
#include "nvmri/lorentzian_fit.hpp"
#include "nvmri/node_detection.hpp"
#include "nvmri/reconstruction.hpp"
#include "nvmri/rng.hpp"
#include "nvmri/scene.hpp"
#include "nvmri/signal_forge.hpp"
#include "nvmri/sinusoid_fit.hpp"
#include "nvmri/spectral.hpp"
#include "nvmri/spin_model.hpp"
#include "nvmri/trace.hpp"
#include "nvmri/version.hpp"
