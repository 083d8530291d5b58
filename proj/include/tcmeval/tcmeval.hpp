#pragma once

#include "tcmeval/alignment.hpp"
#include "tcmeval/assignment.hpp"
#include "tcmeval/diarization.hpp"
#include "tcmeval/error.hpp"
#include "tcmeval/normalize.hpp"
#include "tcmeval/report.hpp"
#include "tcmeval/semantic.hpp"
#include "tcmeval/transcript.hpp"
#include "tcmeval/wer.hpp"
