import init, { evaluate, gap_witness, determinize, bounds, fig1 } from "./pkg/tropdet_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const show = (text) => { $("out").textContent = text; };

await init();
$("automaton").value = JSON.stringify(JSON.parse(fig1()), null, 2);

$("run-eval").onclick = () => show(evaluate($("automaton").value, $("word").value));
$("run-gap").onclick = () => show(gap_witness($("automaton").value, num("min-gap"), num("max-len")));
$("run-det").onclick = () => show(determinize($("automaton").value, num("gap")));
$("run-bounds").onclick = () =>
  show(bounds($("family").value, $("name").value, num("n"), num("d"), num("i"), num("cap")));
