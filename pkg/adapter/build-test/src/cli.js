#!/usr/bin/env node
/**
 * Usage: aedr-adapter --model SPEC [--identity] [--device DEV]
 *
 * SPEC is "identity" or "linear:<backend.json>". --identity forces the
 * loopback mode regardless of --model. --device is accepted for interface
 * compatibility; this adapter only runs on the CPU. Protocol messages flow on
 * stdin/stdout; diagnostics go to stderr.
 */
import { IdentityModel, modelFromSpec } from './models.js';
import { serve } from './server.js';
function main(argv) {
    let spec = null;
    let identity = false;
    for (let i = 0; i < argv.length; i++) {
        const arg = argv[i];
        if (arg === '--model') {
            spec = argv[++i] ?? null;
            if (spec === null) {
                console.error('usage error: --model needs a value');
                process.exit(1);
            }
        }
        else if (arg === '--identity') {
            identity = true;
        }
        else if (arg === '--device') {
            i++; // accepted, ignored: CPU only
        }
        else {
            console.error(`usage error: unknown argument ${JSON.stringify(arg)}`);
            process.exit(1);
        }
    }
    if (!identity && spec === null) {
        console.error('usage error: need --model SPEC or --identity');
        process.exit(1);
    }
    let model;
    try {
        model = identity ? new IdentityModel() : modelFromSpec(spec);
    }
    catch (err) {
        console.error(`error: ${err.message}`);
        process.exit(2);
    }
    console.error(`adapter ready: ${model.name} (deterministic=${model.deterministic})`);
    serve({ model, identity, onExit: () => process.exit(0) });
}
main(process.argv.slice(2));
