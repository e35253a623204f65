import { startApp } from "./client.js";

function wsUrl(): string {
  const param = new URLSearchParams(window.location.search).get("ws");
  return param ?? "ws://127.0.0.1:8765";
}

startApp(document.getElementById("app")!, wsUrl());
