/*
 * Copyright 2026 The Grounded Explainer Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "ge/config.hpp"
#include "ge/detector.hpp"
#include "ge/dialog.hpp"
#include "ge/engine.hpp"
#include "ge/error.hpp"
#include "ge/json_codec.hpp"
#include "ge/phase.hpp"
#include "ge/protocol.hpp"
#include "ge/report.hpp"
#include "ge/risk.hpp"
#include "ge/rng.hpp"
#include "ge/script.hpp"
#include "ge/signal.hpp"
#include "ge/transcript.hpp"
