#pragma once

#include <llctrack/config.hpp>
#include <llctrack/encoder.hpp>
#include <llctrack/error.hpp>
#include <llctrack/evaluation.hpp>
#include <llctrack/geometry.hpp>
#include <llctrack/image_io.hpp>
#include <llctrack/imaging.hpp>
#include <llctrack/llc_solver.hpp>
#include <llctrack/particle_tracker.hpp>
#include <llctrack/synth.hpp>
#include <llctrack/templates.hpp>
